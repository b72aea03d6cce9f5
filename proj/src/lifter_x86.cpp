#include "gadgex/errors.hpp"
#include "gadgex/lifter.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>

namespace gadgex {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

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

// operand forms of the x86-64 subset
struct Operand {
    enum class Kind { Reg64, Reg32, Imm, Mem } kind;
    std::string reg;       // canonical 64-bit register name for Reg/Mem base
    unsigned width = 64;   // value width of the operand
    uint64_t imm = 0;      // Imm value (two's complement, 64-bit)
    int64_t disp = 0;      // Mem displacement
};

const char *k64[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
                     "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
const char *k32[] = {"eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp",
                     "r8d", "r9d", "r10d", "r11d", "r12d", "r13d", "r14d", "r15d"};

std::optional<std::string> reg64_of(const std::string &tok) {
    for (const char *r : k64)
        if (tok == r)
            return upper(tok);
    return std::nullopt;
}

std::optional<std::string> reg32_of(const std::string &tok) {
    for (size_t i = 0; i < 16; i++)
        if (tok == k32[i])
            return upper(std::string(k64[i]));
    return std::nullopt;
}

bool parse_imm(const std::string &tok, uint64_t &out) {
    if (tok.empty())
        return false;
    bool negative = tok[0] == '-';
    std::string body = negative ? tok.substr(1) : tok;
    uint64_t v = 0;
    try {
        size_t used = 0;
        if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0)
            v = std::stoull(body.substr(2), &used, 16), used += 2;
        else
            v = std::stoull(body, &used, 10);
        if (used != body.size())
            return false;
    } catch (...) {
        return false;
    }
    out = negative ? uint64_t(-int64_t(v)) : v;
    return true;
}

struct LiftCtx {
    const Arch &arch;
    uint64_t addr;
    uint32_t size;
    const std::string &text;

    [[noreturn]] void fail(const std::string &why) const {
        throw LiftError(addr, text, why);
    }

    Operand operand(const std::string &raw) const {
        std::string tok = trim(raw);
        if (tok.empty())
            fail("empty operand");
        if (tok.front() == '[') {
            if (tok.back() != ']')
                fail("unterminated memory operand");
            std::string inner = trim(tok.substr(1, tok.size() - 2));
            // base, base+disp, base-disp
            size_t split = inner.find_first_of("+-", 1);
            std::string base = trim(split == std::string::npos ? inner
                                                               : inner.substr(0, split));
            auto r = reg64_of(base);
            if (!r)
                fail("unsupported memory base: " + base);
            Operand op;
            op.kind = Operand::Kind::Mem;
            op.reg = *r;
            if (split != std::string::npos) {
                uint64_t d = 0;
                std::string dstr = trim(inner.substr(split + 1));
                if (!parse_imm(dstr, d))
                    fail("bad displacement: " + dstr);
                op.disp = inner[split] == '-' ? -int64_t(d) : int64_t(d);
            }
            return op;
        }
        if (auto r = reg64_of(tok)) {
            Operand op;
            op.kind = Operand::Kind::Reg64;
            op.reg = *r;
            op.width = 64;
            return op;
        }
        if (auto r = reg32_of(tok)) {
            Operand op;
            op.kind = Operand::Kind::Reg32;
            op.reg = *r;
            op.width = 32;
            return op;
        }
        uint64_t v;
        if (parse_imm(tok, v)) {
            Operand op;
            op.kind = Operand::Kind::Imm;
            op.imm = v;
            return op;
        }
        fail("unsupported operand: " + tok);
    }

    ExprRef reg64(const std::string &name) const { return make_reg(name, 64); }

    // current value of an operand at `width` bits
    ExprRef read(const Operand &op, unsigned width) const {
        switch (op.kind) {
        case Operand::Kind::Reg64:
            return reg64(op.reg);
        case Operand::Kind::Reg32:
            return make_extract(reg64(op.reg), 31, 0);
        case Operand::Kind::Imm:
            return make_const(width, mask_width(width, op.imm));
        case Operand::Kind::Mem:
            return make_load(mem_addr(op), width);
        }
        fail("unreadable operand");
    }

    ExprRef mem_addr(const Operand &op) const {
        ExprRef base = reg64(op.reg);
        if (op.disp == 0)
            return base;
        return make_bin(BinKind::Add, base, make_const(64, uint64_t(op.disp)));
    }

    // width an instruction operates at, from its operands
    unsigned op_width(const Operand &a, const Operand &b) const {
        if (a.kind == Operand::Kind::Reg64 || a.kind == Operand::Kind::Reg32)
            return a.width;
        if (b.kind == Operand::Kind::Reg64 || b.kind == Operand::Kind::Reg32)
            return b.width;
        fail("cannot derive operand width");
    }

    void write(std::vector<Stmt> &ir, const Operand &dst, unsigned width,
               ExprRef value) const {
        if (dst.kind == Operand::Kind::Reg64) {
            ir.push_back({Stmt::Kind::Assign, dst.reg, std::move(value), nullptr, 0});
        } else if (dst.kind == Operand::Kind::Reg32) {
            // 32-bit destination writes zero the upper half
            ir.push_back({Stmt::Kind::Assign, dst.reg,
                          make_zext(std::move(value), 64), nullptr, 0});
        } else if (dst.kind == Operand::Kind::Mem) {
            Stmt s;
            s.kind = Stmt::Kind::Store;
            s.addr = mem_addr(dst);
            s.value = std::move(value);
            s.width = width;
            ir.push_back(std::move(s));
        } else {
            fail("immediate destination");
        }
    }
};

void emit_flags(std::vector<Stmt> &ir, ExprRef result, ExprRef carry) {
    unsigned w = result->width;
    ir.push_back({Stmt::Kind::Assign, "ZF",
                  make_bin(BinKind::Eq, result, make_const(w, 0)), nullptr, 0});
    ir.push_back({Stmt::Kind::Assign, "NF",
                  make_bin(BinKind::Slt, result, make_const(w, 0)), nullptr, 0});
    ir.push_back({Stmt::Kind::Assign, "CF", std::move(carry), nullptr, 0});
}

} // namespace

LiftResult lift_x86_64(const Arch &arch, const std::string &asm_text, uint64_t addr,
                       uint32_t size) {
    LiftCtx cx{arch, addr, size, asm_text};
    std::string text = trim(asm_text);
    size_t sp = text.find_first_of(" \t");
    std::string mnem = lower(sp == std::string::npos ? text : text.substr(0, sp));
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

    auto want = [&](size_t n) {
        if (ops.size() != n)
            cx.fail("expected " + std::to_string(n) + " operand(s)");
    };

    if (mnem == "mov") {
        want(2);
        Operand dst = cx.operand(ops[0]);
        Operand src = cx.operand(ops[1]);
        if (dst.kind == Operand::Kind::Imm)
            cx.fail("immediate destination");
        if (dst.kind == Operand::Kind::Mem && src.kind == Operand::Kind::Mem)
            cx.fail("memory-to-memory move");
        if (dst.kind == Operand::Kind::Mem && src.kind == Operand::Kind::Imm)
            cx.fail("immediate-to-memory move needs an explicit width");
        unsigned w = cx.op_width(dst, src);
        cx.write(out.ir, dst, w, cx.read(src, w));
        return out;
    }

    if (mnem == "add" || mnem == "sub" || mnem == "xor" || mnem == "and" ||
        mnem == "or") {
        want(2);
        Operand dst = cx.operand(ops[0]);
        Operand src = cx.operand(ops[1]);
        if (dst.kind == Operand::Kind::Imm)
            cx.fail("immediate destination");
        if (dst.kind == Operand::Kind::Mem && src.kind == Operand::Kind::Mem)
            cx.fail("memory-to-memory operation");
        if (dst.kind == Operand::Kind::Mem && src.kind == Operand::Kind::Imm)
            cx.fail("immediate-to-memory operation needs an explicit width");
        unsigned w = cx.op_width(dst, src);
        ExprRef a = cx.read(dst, w);
        ExprRef b = cx.read(src, w);
        BinKind op = mnem == "add"   ? BinKind::Add
                     : mnem == "sub" ? BinKind::Sub
                     : mnem == "xor" ? BinKind::Xor
                     : mnem == "and" ? BinKind::And
                                     : BinKind::Or;
        ExprRef result = make_bin(op, a, b);
        ExprRef carry;
        if (op == BinKind::Add)
            carry = make_bin(BinKind::Ult, result, a); // carry-out of a+b
        else if (op == BinKind::Sub)
            carry = make_bin(BinKind::Ult, a, b); // borrow
        else
            carry = make_const(1, 0);
        // flags are computed from the pre-assignment operand values
        emit_flags(out.ir, result, carry);
        cx.write(out.ir, dst, w, result);
        return out;
    }

    if (mnem == "lea") {
        want(2);
        Operand dst = cx.operand(ops[0]);
        Operand src = cx.operand(ops[1]);
        if (dst.kind != Operand::Kind::Reg64 || src.kind != Operand::Kind::Mem)
            cx.fail("lea needs a 64-bit register and a memory operand");
        cx.write(out.ir, dst, 64, cx.mem_addr(src));
        return out;
    }

    if (mnem == "push") {
        want(1);
        Operand src = cx.operand(ops[0]);
        if (src.kind == Operand::Kind::Reg32 || src.kind == Operand::Kind::Mem)
            cx.fail("push supports 64-bit registers and immediates");
        ExprRef rsp = cx.reg64("RSP");
        out.ir.push_back({Stmt::Kind::Assign, "RSP",
                          make_bin(BinKind::Sub, rsp, make_const(64, 8)), nullptr, 0});
        Stmt st;
        st.kind = Stmt::Kind::Store;
        st.addr = cx.reg64("RSP");
        st.value = cx.read(src, 64);
        st.width = 64;
        out.ir.push_back(std::move(st));
        return out;
    }

    if (mnem == "pop") {
        want(1);
        Operand dst = cx.operand(ops[0]);
        if (dst.kind != Operand::Kind::Reg64)
            cx.fail("pop supports 64-bit registers");
        out.ir.push_back({Stmt::Kind::Assign, dst.reg,
                          make_load(cx.reg64("RSP"), 64), nullptr, 0});
        out.ir.push_back({Stmt::Kind::Assign, "RSP",
                          make_bin(BinKind::Add, cx.reg64("RSP"), make_const(64, 8)),
                          nullptr, 0});
        return out;
    }

    if (mnem == "ret") {
        want(0);
        out.cls = InstrClass::RET;
        out.ir.push_back({Stmt::Kind::Assign, "RIP",
                          make_load(cx.reg64("RSP"), 64), nullptr, 0});
        out.ir.push_back({Stmt::Kind::Assign, "RSP",
                          make_bin(BinKind::Add, cx.reg64("RSP"), make_const(64, 8)),
                          nullptr, 0});
        return out;
    }

    if (mnem == "call") {
        want(1);
        uint64_t next = addr + size;
        // register / memory operands are indirect; immediates and symbols are
        // direct targets
        bool indirect = reg64_of(lower(trim(ops[0]))).has_value() ||
                        trim(ops[0]).front() == '[';
        // return address push; plain calls bound gadgets and fixed calls are
        // modeled separately, but ICALL suffixes execute this IR
        auto push_ret = [&] {
            out.ir.push_back({Stmt::Kind::Assign, "RSP",
                              make_bin(BinKind::Sub, cx.reg64("RSP"),
                                       make_const(64, 8)),
                              nullptr, 0});
            Stmt st;
            st.kind = Stmt::Kind::Store;
            st.addr = cx.reg64("RSP");
            st.value = make_const(64, next);
            st.width = 64;
            out.ir.push_back(std::move(st));
        };
        if (indirect) {
            Operand tgt = cx.operand(ops[0]);
            out.cls = InstrClass::ICALL;
            push_ret();
            out.ir.push_back({Stmt::Kind::Assign, "RIP", cx.read(tgt, 64), nullptr, 0});
        } else {
            out.cls = InstrClass::CALL;
            push_ret();
        }
        return out;
    }

    if (mnem == "jmp") {
        want(1);
        bool indirect = reg64_of(lower(trim(ops[0]))).has_value() ||
                        trim(ops[0]).front() == '[';
        if (indirect) {
            Operand tgt = cx.operand(ops[0]);
            out.cls = InstrClass::IJUMP;
            out.ir.push_back({Stmt::Kind::Assign, "RIP", cx.read(tgt, 64), nullptr, 0});
        } else {
            out.cls = InstrClass::JUMP;
        }
        return out;
    }

    auto flag = [&](const char *name) { return make_reg(name, 1); };
    if (mnem == "je" || mnem == "jz") {
        out.cls = InstrClass::COND;
        out.cond = flag("ZF");
        return out;
    }
    if (mnem == "jne" || mnem == "jnz") {
        out.cls = InstrClass::COND;
        out.cond = make_not(flag("ZF"));
        return out;
    }
    if (mnem == "js") {
        out.cls = InstrClass::COND;
        out.cond = flag("NF");
        return out;
    }
    if (mnem == "jns") {
        out.cls = InstrClass::COND;
        out.cond = make_not(flag("NF"));
        return out;
    }
    if (mnem == "jb" || mnem == "jc") {
        out.cls = InstrClass::COND;
        out.cond = flag("CF");
        return out;
    }
    if (mnem == "jae" || mnem == "jnb" || mnem == "jnc") {
        out.cls = InstrClass::COND;
        out.cond = make_not(flag("CF"));
        return out;
    }

    cx.fail("mnemonic outside the supported subset");
}

} // namespace gadgex
