#include "gadgex/arch.hpp"

#include "gadgex/errors.hpp"

#include <algorithm>

namespace gadgex {

bool Arch::has_reg(const std::string &r) const {
    for (const auto &[name, w] : registers)
        if (name == r)
            return true;
    return false;
}

unsigned Arch::reg_width(const std::string &r) const {
    for (const auto &[name, w] : registers)
        if (name == r)
            return w;
    throw UnknownRegister("unknown register: " + r);
}

bool Arch::is_classifiable(const std::string &r) const {
    return std::find(classifiable.begin(), classifiable.end(), r) != classifiable.end();
}

void Arch::validate() const {
    if (name.empty())
        throw ValidationError("arch: empty name");
    if (bits != 32 && bits != 64)
        throw ValidationError("arch: word width must be 32 or 64");
    if (registers.empty())
        throw ValidationError("arch: no registers");
    for (const auto &[r, w] : registers) {
        if (r.empty())
            throw ValidationError("arch: empty register name");
        // flags are permitted as width-1 registers
        if (w != 1 && w != 8 && w != 16 && w != 32 && w != 64)
            throw ValidationError("arch: register " + r + " has unsupported width " +
                                  std::to_string(w));
    }
    for (size_t i = 0; i < registers.size(); i++)
        for (size_t j = i + 1; j < registers.size(); j++)
            if (registers[i].first == registers[j].first)
                throw ValidationError("arch: duplicate register " + registers[i].first);
    if (!has_reg(sp))
        throw ValidationError("arch: sp register " + sp + " not declared");
    if (!has_reg(ip))
        throw ValidationError("arch: ip register " + ip + " not declared");
    for (const auto &r : classifiable)
        if (!has_reg(r))
            throw ValidationError("arch: classifiable register " + r + " not declared");
    if (!is_classifiable(ip))
        throw ValidationError("arch: classifiable set must contain the instruction pointer");
}

Arch x86_64_arch() {
    Arch a;
    a.name = "x86-64";
    a.bits = 64;
    a.endianness = Endian::Little;
    for (const char *r : {"RAX", "RBX", "RCX", "RDX", "RSI", "RDI", "RBP", "RSP",
                          "R8", "R9", "R10", "R11", "R12", "R13", "R14", "R15", "RIP"})
        a.registers.emplace_back(r, 64);
    for (const char *f : {"ZF", "NF", "CF"})
        a.registers.emplace_back(f, 1);
    a.sp = "RSP";
    a.ip = "RIP";
    a.classifiable = {"RAX", "RBX", "RCX", "RDX", "RSI", "RDI", "R8", "R9",
                      "R10", "R11", "R12", "R13", "R14", "R15", "RIP"};
    return a;
}

Arch arm_a32_arch() {
    Arch a;
    a.name = "arm";
    a.bits = 32;
    a.endianness = Endian::Little;
    for (const char *r : {"R0", "R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8",
                          "R9", "R10", "R11", "R12", "SP", "LR", "PC"})
        a.registers.emplace_back(r, 32);
    for (const char *f : {"ZF", "NF", "CF"})
        a.registers.emplace_back(f, 1);
    a.sp = "SP";
    a.ip = "PC";
    a.classifiable = {"R0", "R1", "R2", "R3", "R4", "R5", "R6", "R7",
                      "R8", "R9", "R10", "R11", "R12", "LR", "PC"};
    return a;
}

} // namespace gadgex
