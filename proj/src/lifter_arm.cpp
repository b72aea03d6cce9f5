#include "gadgex/errors.hpp"
#include "gadgex/lifter.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace gadgex {

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

std::string trim(const std::string &s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::optional<std::string> reg_of(const std::string &tok) {
    std::string t = upper(trim(tok));
    if (t == "SP" || t == "LR" || t == "PC")
        return t;
    if (t == "R13") return std::string("SP");
    if (t == "R14") return std::string("LR");
    if (t == "R15") return std::string("PC");
    if (t.size() >= 2 && t[0] == 'R') {
        std::string num = t.substr(1);
        if (!num.empty() && std::all_of(num.begin(), num.end(), ::isdigit)) {
            int n = std::stoi(num);
            if (n >= 0 && n <= 12)
                return t;
        }
    }
    return std::nullopt;
}

bool parse_imm(std::string tok, uint64_t &out) {
    tok = trim(tok);
    if (tok.empty() || tok[0] != '#')
        return false;
    tok = tok.substr(1);
    bool neg = !tok.empty() && tok[0] == '-';
    if (neg)
        tok = tok.substr(1);
    try {
        size_t used = 0;
        uint64_t v;
        if (tok.rfind("0x", 0) == 0 || tok.rfind("0X", 0) == 0)
            v = std::stoull(tok.substr(2), &used, 16), used += 2;
        else
            v = std::stoull(tok, &used, 10);
        if (used != tok.size())
            return false;
        out = mask_width(32, neg ? uint64_t(-int64_t(v)) : v);
        return true;
    } catch (...) {
        return false;
    }
}

// condition code suffix -> branch condition over the flag registers
ExprRef cond_expr(const std::string &cc) {
    auto flag = [](const char *n) { return make_reg(n, 1); };
    if (cc == "EQ") return flag("ZF");
    if (cc == "NE") return make_not(flag("ZF"));
    if (cc == "MI") return flag("NF");
    if (cc == "PL") return make_not(flag("NF"));
    if (cc == "CS" || cc == "HS") return flag("CF");
    if (cc == "CC" || cc == "LO") return make_not(flag("CF"));
    return nullptr;
}

struct ArmCtx {
    uint64_t addr;
    uint32_t size;
    const std::string &text;

    [[noreturn]] void fail(const std::string &why) const {
        throw LiftError(addr, text, why);
    }

    ExprRef reg(const std::string &raw) const {
        auto r = reg_of(raw);
        if (!r)
            fail("unsupported register: " + trim(raw));
        return make_reg(*r, 32);
    }

    std::string reg_name(const std::string &raw) const {
        auto r = reg_of(raw);
        if (!r)
            fail("unsupported register: " + trim(raw));
        return *r;
    }

    // Rm or #imm
    ExprRef flexible(const std::string &raw) const {
        uint64_t imm;
        if (parse_imm(raw, imm))
            return make_const(32, imm);
        return reg(raw);
    }

    // [Rn] or [Rn,#imm]
    ExprRef mem_addr(const std::string &raw) const {
        std::string t = trim(raw);
        if (t.empty() || t.front() != '[' || t.back() != ']')
            fail("unsupported addressing mode: " + t);
        std::string inner = t.substr(1, t.size() - 2);
        size_t comma = inner.find(',');
        std::string base = comma == std::string::npos ? inner : inner.substr(0, comma);
        ExprRef b = reg(base);
        if (comma == std::string::npos)
            return b;
        uint64_t off;
        if (!parse_imm(inner.substr(comma + 1), off))
            fail("unsupported offset: " + inner.substr(comma + 1));
        if (off == 0)
            return b;
        return make_bin(BinKind::Add, b, make_const(32, off));
    }
};

// splits "LDRNE" into ("LDR", "NE") against the known condition suffixes
bool split_cc(const std::string &mnem, const std::string &base, std::string &cc) {
    if (mnem == base) {
        cc.clear();
        return true;
    }
    if (mnem.size() == base.size() + 2 && mnem.rfind(base, 0) == 0) {
        cc = mnem.substr(base.size());
        return cond_expr(cc) != nullptr;
    }
    return false;
}

} // namespace

LiftResult lift_arm_a32(const Arch &arch, const std::string &asm_text, uint64_t addr,
                        uint32_t size) {
    (void)arch;
    ArmCtx cx{addr, size, asm_text};
    std::string text = trim(asm_text);
    size_t sp = text.find_first_of(" \t");
    std::string mnem = upper(sp == std::string::npos ? text : text.substr(0, sp));
    std::string rest = sp == std::string::npos ? "" : trim(text.substr(sp + 1));

    std::vector<std::string> ops;
    if (!rest.empty()) {
        size_t start = 0;
        int depth = 0;
        for (size_t i = 0; i <= rest.size(); i++) {
            if (i == rest.size() || (rest[i] == ',' && depth == 0)) {
                ops.push_back(trim(rest.substr(start, i - start)));
                start = i + 1;
            } else if (rest[i] == '[')
                depth++;
            else if (rest[i] == ']')
                depth--;
        }
    }

    LiftResult out;
    std::string cc;

    auto want = [&](size_t n) {
        if (ops.size() != n)
            cx.fail("expected " + std::to_string(n) + " operand(s)");
    };

    auto guard = [&](ExprRef value, const std::string &old_reg) -> ExprRef {
        if (cc.empty())
            return value;
        return make_ite(cond_expr(cc), std::move(value), make_reg(old_reg, 32));
    };

    if (split_cc(mnem, "MOV", cc)) {
        want(2);
        std::string rd = cx.reg_name(ops[0]);
        if (rd == "PC")
            cx.fail("PC destination outside the subset");
        out.ir.push_back(
            {Stmt::Kind::Assign, rd, guard(cx.flexible(ops[1]), rd), nullptr, 0});
        return out;
    }

    if (split_cc(mnem, "LDR", cc)) {
        want(2);
        std::string rt = cx.reg_name(ops[0]);
        if (rt == "PC")
            cx.fail("PC destination outside the subset");
        ExprRef value = make_load(cx.mem_addr(ops[1]), 32);
        out.ir.push_back(
            {Stmt::Kind::Assign, rt, guard(std::move(value), rt), nullptr, 0});
        return out;
    }

    if (mnem == "STR") {
        want(2);
        Stmt st;
        st.kind = Stmt::Kind::Store;
        st.addr = cx.mem_addr(ops[1]);
        st.value = cx.reg(ops[0]);
        st.width = 32;
        out.ir.push_back(std::move(st));
        return out;
    }

    if (mnem == "ADD" || mnem == "SUB") {
        BinKind op = mnem == "ADD" ? BinKind::Add : BinKind::Sub;
        if (ops.size() == 2) {
            std::string rd = cx.reg_name(ops[0]);
            out.ir.push_back({Stmt::Kind::Assign, rd,
                              make_bin(op, make_reg(rd, 32), cx.flexible(ops[1])),
                              nullptr, 0});
            return out;
        }
        want(3);
        std::string rd = cx.reg_name(ops[0]);
        if (rd == "PC")
            cx.fail("PC destination outside the subset");
        out.ir.push_back({Stmt::Kind::Assign, rd,
                          make_bin(op, cx.reg(ops[1]), cx.flexible(ops[2])), nullptr,
                          0});
        return out;
    }

    if (mnem == "TST") {
        want(2);
        ExprRef res = make_bin(BinKind::And, cx.reg(ops[0]), cx.flexible(ops[1]));
        out.ir.push_back({Stmt::Kind::Assign, "ZF",
                          make_bin(BinKind::Eq, res, make_const(32, 0)), nullptr, 0});
        out.ir.push_back({Stmt::Kind::Assign, "NF",
                          make_bin(BinKind::Slt, res, make_const(32, 0)), nullptr, 0});
        return out;
    }

    if (mnem == "CMP") {
        want(2);
        ExprRef a = cx.reg(ops[0]);
        ExprRef b = cx.flexible(ops[1]);
        ExprRef res = make_bin(BinKind::Sub, a, b);
        out.ir.push_back({Stmt::Kind::Assign, "ZF",
                          make_bin(BinKind::Eq, res, make_const(32, 0)), nullptr, 0});
        out.ir.push_back({Stmt::Kind::Assign, "NF",
                          make_bin(BinKind::Slt, res, make_const(32, 0)), nullptr, 0});
        // ARM carry after subtraction is NOT borrow
        out.ir.push_back({Stmt::Kind::Assign, "CF", make_bin(BinKind::Uge, a, b),
                          nullptr, 0});
        return out;
    }

    if (mnem == "BX") {
        want(1);
        std::string rm = cx.reg_name(ops[0]);
        out.cls = rm == "LR" ? InstrClass::RET : InstrClass::IJUMP;
        out.ir.push_back({Stmt::Kind::Assign, "PC", make_reg(rm, 32), nullptr, 0});
        return out;
    }

    if (mnem == "BLX") {
        want(1);
        std::string rm = cx.reg_name(ops[0]);
        out.cls = InstrClass::ICALL;
        out.ir.push_back({Stmt::Kind::Assign, "LR",
                          make_const(32, mask_width(32, addr + size)), nullptr, 0});
        out.ir.push_back({Stmt::Kind::Assign, "PC", make_reg(rm, 32), nullptr, 0});
        return out;
    }

    if (mnem == "BL") {
        want(1);
        out.cls = InstrClass::CALL;
        out.ir.push_back({Stmt::Kind::Assign, "LR",
                          make_const(32, mask_width(32, addr + size)), nullptr, 0});
        return out;
    }

    if (mnem == "B") {
        want(1);
        out.cls = InstrClass::JUMP;
        return out;
    }
    if (mnem.size() == 3 && mnem[0] == 'B') {
        ExprRef c = cond_expr(mnem.substr(1));
        if (c) {
            want(1);
            out.cls = InstrClass::COND;
            out.cond = c;
            return out;
        }
    }

    cx.fail("mnemonic outside the supported subset");
}

LiftResult lift_instruction(const Arch &arch, const std::string &asm_text,
                            uint64_t addr, uint32_t size) {
    if (arch.name == "x86-64" || arch.name == "amd64")
        return lift_x86_64(arch, asm_text, addr, size);
    if (arch.name == "arm" || arch.name == "arm-a32")
        return lift_arm_a32(arch, asm_text, addr, size);
    throw LiftError(addr, asm_text, "no lifter for architecture " + arch.name);
}

} // namespace gadgex
