#include "gadgex/ir.hpp"

#include "gadgex/errors.hpp"

#include <cctype>
#include <sstream>

namespace gadgex {

bool Stmt::operator==(const Stmt &o) const {
    if (kind != o.kind)
        return false;
    if (kind == Kind::Assign)
        return reg == o.reg && expr_equal(value, o.value);
    return width == o.width && expr_equal(addr, o.addr) && expr_equal(value, o.value);
}

namespace {

struct Lexer {
    const Arch &arch;
    const std::string &text;
    size_t pos = 0;

    Lexer(const Arch &a, const std::string &t) : arch(a), text(t) {}

    [[noreturn]] void fail(const std::string &why) const {
        throw ParseError(1, why + " at offset " + std::to_string(pos) + " in '" +
                                 text + "'");
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(uint8_t(text[pos])))
            pos++;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            pos++;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!eat(c))
            fail(std::string("expected '") + c + "'");
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(uint8_t(text[pos])) || text[pos] == '_'))
            pos++;
        if (pos == start)
            fail("expected identifier");
        return text.substr(start, pos - start);
    }

    uint64_t number() {
        skip_ws();
        size_t start = pos;
        uint64_t v = 0;
        if (pos + 1 < text.size() && text[pos] == '0' &&
            (text[pos + 1] == 'x' || text[pos + 1] == 'X')) {
            pos += 2;
            size_t digits = 0;
            while (pos < text.size() && std::isxdigit(uint8_t(text[pos]))) {
                v = v * 16 + uint64_t(std::isdigit(uint8_t(text[pos]))
                                          ? text[pos] - '0'
                                          : std::tolower(text[pos]) - 'a' + 10);
                pos++;
                digits++;
            }
            if (digits == 0)
                fail("expected hex digits");
        } else {
            size_t digits = 0;
            while (pos < text.size() && std::isdigit(uint8_t(text[pos]))) {
                v = v * 10 + uint64_t(text[pos] - '0');
                pos++;
                digits++;
            }
            if (digits == 0)
                fail("expected number");
        }
        (void)start;
        return v;
    }

    unsigned width_suffix() {
        expect(':');
        uint64_t w = number();
        if (w == 0 || w > 64)
            fail("bad width");
        return unsigned(w);
    }

    ExprRef expr();

    ExprRef args1(unsigned width, ExprRef (*mk)(ExprRef, unsigned)) {
        expect('(');
        ExprRef a = expr();
        expect(')');
        return mk(std::move(a), width);
    }
};

// splits a head identifier like "load32" / "zext64" / "extract31" into the
// textual op and a trailing number, if any
bool split_num_suffix(const std::string &id, std::string &head, uint64_t &num) {
    size_t i = id.size();
    while (i > 0 && std::isdigit(uint8_t(id[i - 1])))
        i--;
    if (i == id.size())
        return false;
    head = id.substr(0, i);
    num = std::stoull(id.substr(i));
    return true;
}

BinKind bin_from_name(const std::string &n, bool &ok) {
    ok = true;
    if (n == "add") return BinKind::Add;
    if (n == "sub") return BinKind::Sub;
    if (n == "mul") return BinKind::Mul;
    if (n == "and") return BinKind::And;
    if (n == "or") return BinKind::Or;
    if (n == "xor") return BinKind::Xor;
    if (n == "shl") return BinKind::Shl;
    if (n == "lshr") return BinKind::Lshr;
    if (n == "ashr") return BinKind::Ashr;
    if (n == "eq") return BinKind::Eq;
    if (n == "ne") return BinKind::Ne;
    if (n == "ult") return BinKind::Ult;
    if (n == "slt") return BinKind::Slt;
    if (n == "uge") return BinKind::Uge;
    if (n == "sge") return BinKind::Sge;
    ok = false;
    return BinKind::Add;
}

ExprRef Lexer::expr() {
    skip_ws();
    if (pos >= text.size())
        fail("unexpected end of input");

    if (text[pos] == '0' && pos + 1 < text.size() &&
        (text[pos + 1] == 'x' || text[pos + 1] == 'X')) {
        uint64_t v = number();
        unsigned w = width_suffix();
        if (mask_width(w, v) != v)
            throw WidthError("literal does not fit declared width in '" + text + "'");
        return make_const(w, v);
    }
    if (std::isdigit(uint8_t(text[pos]))) {
        uint64_t v = number();
        unsigned w = width_suffix();
        if (mask_width(w, v) != v)
            throw WidthError("literal does not fit declared width in '" + text + "'");
        return make_const(w, v);
    }

    std::string id = ident();

    // two-argument ops
    bool is_bin = false;
    BinKind bk = bin_from_name(id, is_bin);
    if (is_bin) {
        expect('(');
        ExprRef a = expr();
        expect(',');
        ExprRef b = expr();
        expect(')');
        return make_bin(bk, std::move(a), std::move(b));
    }

    if (id == "not" || id == "neg") {
        expect('(');
        ExprRef a = expr();
        expect(')');
        return id == "not" ? make_not(std::move(a)) : make_neg(std::move(a));
    }
    if (id == "ite") {
        expect('(');
        ExprRef c = expr();
        expect(',');
        ExprRef t = expr();
        expect(',');
        ExprRef e = expr();
        expect(')');
        return make_ite(std::move(c), std::move(t), std::move(e));
    }
    if (id == "init") {
        expect('(');
        std::string r = ident();
        expect(')');
        if (!arch.has_reg(r))
            throw ValidationError("unknown register in expression: " + r);
        return make_init(r, arch.reg_width(r));
    }
    if (id == "sym") {
        expect('(');
        std::string n = ident();
        expect(')');
        unsigned w = width_suffix();
        return make_sym(n, w);
    }
    if (id == "meminit")
        return make_meminit();

    std::string head;
    uint64_t num = 0;
    if (split_num_suffix(id, head, num)) {
        if (head == "load") {
            expect('(');
            ExprRef a = expr();
            expect(')');
            return make_load(std::move(a), unsigned(num));
        }
        if (head == "select") {
            expect('(');
            ExprRef m = expr();
            expect(',');
            ExprRef a = expr();
            expect(')');
            return make_select(std::move(m), std::move(a), unsigned(num));
        }
        if (head == "store") {
            expect('(');
            ExprRef m = expr();
            expect(',');
            ExprRef a = expr();
            expect(',');
            ExprRef v = expr();
            expect(')');
            return make_store(std::move(m), std::move(a), std::move(v), unsigned(num));
        }
        if (head == "zext" || head == "sext") {
            expect('(');
            ExprRef a = expr();
            expect(')');
            return head == "zext" ? make_zext(std::move(a), unsigned(num))
                                  : make_sext(std::move(a), unsigned(num));
        }
        if (head == "extract") {
            // extract<hi:lo>(e)
            unsigned hi = unsigned(num);
            expect(':');
            unsigned lo = unsigned(number());
            expect('(');
            ExprRef a = expr();
            expect(')');
            return make_extract(std::move(a), hi, lo);
        }
    }

    // plain register reference
    if (!arch.has_reg(id))
        throw ValidationError("unknown register in expression: " + id);
    return make_reg(id, arch.reg_width(id));
}

} // namespace

ExprRef parse_expr(const Arch &arch, const std::string &text) {
    Lexer lx(arch, text);
    ExprRef e = lx.expr();
    if (!lx.at_end())
        lx.fail("trailing input");
    return e;
}

Stmt parse_stmt(const Arch &arch, const std::string &text) {
    // statement store<w>(addr, value) vs REG := expr
    Lexer lx(arch, text);
    lx.skip_ws();
    std::string id = lx.ident();
    std::string head;
    uint64_t num = 0;
    lx.skip_ws();
    if (lx.pos < text.size() && text[lx.pos] == '(' &&
        split_num_suffix(id, head, num) && head == "store") {
        lx.expect('(');
        ExprRef a = lx.expr();
        lx.expect(',');
        ExprRef v = lx.expr();
        lx.expect(')');
        if (!lx.at_end())
            lx.fail("trailing input");
        Stmt s;
        s.kind = Stmt::Kind::Store;
        s.width = unsigned(num);
        if (v->width != s.width)
            throw WidthError("stored value width " + std::to_string(v->width) +
                             " != store width " + std::to_string(s.width) + " in '" +
                             text + "'");
        s.addr = std::move(a);
        s.value = std::move(v);
        return s;
    }

    if (!arch.has_reg(id))
        throw ValidationError("unknown register in statement: " + id);
    lx.skip_ws();
    if (!(lx.eat(':') && lx.eat('=')))
        lx.fail("expected ':='");
    ExprRef v = lx.expr();
    if (!lx.at_end())
        lx.fail("trailing input");
    if (v->width != arch.reg_width(id))
        throw WidthError("assignment to " + id + ": value width " +
                         std::to_string(v->width) + " != register width " +
                         std::to_string(arch.reg_width(id)));
    Stmt s;
    s.kind = Stmt::Kind::Assign;
    s.reg = id;
    s.value = std::move(v);
    return s;
}

std::string stmt_to_text(const Stmt &s) {
    if (s.kind == Stmt::Kind::Assign)
        return s.reg + " := " + expr_to_text(s.value);
    std::ostringstream os;
    os << "store" << s.width << "(" << expr_to_text(s.addr) << ", "
       << expr_to_text(s.value) << ")";
    return os.str();
}

void check_widths(const Arch &arch, const ExprRef &e) {
    if (!e)
        throw WidthError("null expression");
    switch (e->kind) {
    case ExprKind::Const:
        if (mask_width(e->width, e->value) != e->value)
            throw WidthError("constant does not fit width");
        return;
    case ExprKind::Reg:
    case ExprKind::Init:
        if (!arch.has_reg(e->name))
            throw ValidationError("unknown register: " + e->name);
        if (arch.reg_width(e->name) != e->width)
            throw WidthError("register width mismatch for " + e->name);
        return;
    case ExprKind::Sym:
    case ExprKind::MemInit:
        return;
    case ExprKind::Load:
        check_widths(arch, e->a);
        if (e->a->width != arch.bits)
            throw WidthError("load address must be full-width");
        return;
    case ExprKind::MemSelect:
        check_widths(arch, e->a);
        check_widths(arch, e->b);
        if (e->b->width != arch.bits)
            throw WidthError("select address must be full-width");
        return;
    case ExprKind::MemStore:
        check_widths(arch, e->a);
        check_widths(arch, e->b);
        check_widths(arch, e->c);
        if (e->b->width != arch.bits)
            throw WidthError("store address must be full-width");
        return;
    case ExprKind::Bin:
        check_widths(arch, e->a);
        check_widths(arch, e->b);
        return;
    case ExprKind::Un:
        check_widths(arch, e->a);
        return;
    case ExprKind::Ite:
        check_widths(arch, e->a);
        check_widths(arch, e->b);
        check_widths(arch, e->c);
        return;
    }
}

void check_widths(const Arch &arch, const Stmt &s) {
    if (s.kind == Stmt::Kind::Assign) {
        if (!arch.has_reg(s.reg))
            throw ValidationError("unknown register: " + s.reg);
        check_widths(arch, s.value);
        if (s.value->width != arch.reg_width(s.reg))
            throw WidthError("assignment width mismatch for " + s.reg);
    } else {
        check_widths(arch, s.addr);
        check_widths(arch, s.value);
        if (s.addr->width != arch.bits)
            throw WidthError("store address must be full-width");
    }
}

} // namespace gadgex
