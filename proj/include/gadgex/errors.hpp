#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gadgex {

struct Error : std::runtime_error {
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
    size_t line;
    ParseError(size_t line_, const std::string &reason)
        : Error("parse error, line " + std::to_string(line_) + ": " + reason),
          line(line_) {}
};

struct ValidationError : Error {
    using Error::Error;
};

struct LiftError : Error {
    uint64_t addr;
    std::string mnemonic;
    LiftError(uint64_t addr_, const std::string &mnemonic_, const std::string &reason)
        : Error("cannot lift instruction at 0x" + to_hex(addr_) + " (" + mnemonic_ +
                "): " + reason),
          addr(addr_), mnemonic(mnemonic_) {}

  private:
    static std::string to_hex(uint64_t v) {
        if (v == 0)
            return "0";
        const char *digits = "0123456789abcdef";
        std::string s;
        while (v) {
            s.insert(s.begin(), digits[v & 0xf]);
            v >>= 4;
        }
        return s;
    }
};

struct MalformedInstruction : Error {
    using Error::Error;
};

struct WidthError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct DuplicateId : Error {
    using Error::Error;
};

struct UnknownRegister : Error {
    using Error::Error;
};

struct UnknownSymbol : Error {
    using Error::Error;
};

} // namespace gadgex
