#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gadgex {

enum class Endian : uint8_t { Little, Big };

/// Architecture description as carried by the interchange format. Register
/// widths are in bits; flag registers are modeled as ordinary width-1
/// registers. `classifiable` lists the registers whose output equations get
/// semantic tags (general purpose registers plus the instruction pointer).
struct Arch {
    std::string name;
    unsigned bits = 64;
    Endian endianness = Endian::Little;
    std::vector<std::pair<std::string, unsigned>> registers; // ordered (name, width)
    std::string sp;
    std::string ip;
    std::vector<std::string> classifiable;

    bool has_reg(const std::string &r) const;
    unsigned reg_width(const std::string &r) const; // throws UnknownRegister
    bool is_classifiable(const std::string &r) const;

    /// Checks the structural invariants; throws ValidationError.
    void validate() const;

    bool operator==(const Arch &) const = default;
};

/// Built-in archs used by fixtures and corpus builders.
Arch x86_64_arch();
Arch arm_a32_arch();

} // namespace gadgex
