#include "gadgex/classify.hpp"

#include "gadgex/errors.hpp"
#include "gadgex/ir.hpp"

#include <sstream>

namespace gadgex {

const char *tag_kind_name(TagKind k) {
    switch (k) {
    case TagKind::Nop: return "NOP";
    case TagKind::MovReg: return "MovReg";
    case TagKind::LoadReg: return "LoadReg";
    case TagKind::Arithmetic: return "Arithmetic";
    case TagKind::LoadMem: return "LoadMem";
    case TagKind::ArithmeticLoad: return "ArithmeticLoad";
    case TagKind::StoreMem: return "StoreMem";
    case TagKind::ArithmeticStore: return "ArithmeticStore";
    case TagKind::Undefined: return "Undefined";
    }
    return "?";
}

TagKind tag_kind_from_name(const std::string &s) {
    if (s == "NOP") return TagKind::Nop;
    if (s == "MovReg") return TagKind::MovReg;
    if (s == "LoadReg") return TagKind::LoadReg;
    if (s == "Arithmetic") return TagKind::Arithmetic;
    if (s == "LoadMem") return TagKind::LoadMem;
    if (s == "ArithmeticLoad") return TagKind::ArithmeticLoad;
    if (s == "StoreMem") return TagKind::StoreMem;
    if (s == "ArithmeticStore") return TagKind::ArithmeticStore;
    if (s == "Undefined") return TagKind::Undefined;
    throw ValidationError("unknown semantic tag: " + s);
}

bool SemanticTag::operator==(const SemanticTag &o) const {
    return kind == o.kind && (kind == TagKind::Nop || kind == TagKind::Undefined ||
                              (op == o.op && expr_equal(a, o.a) && expr_equal(b, o.b)));
}

std::string tag_to_text(const SemanticTag &t) {
    std::ostringstream os;
    switch (t.kind) {
    case TagKind::Nop:
    case TagKind::Undefined:
        return tag_kind_name(t.kind);
    case TagKind::MovReg:
    case TagKind::LoadReg:
    case TagKind::LoadMem:
        os << tag_kind_name(t.kind) << "(" << expr_to_text(t.a) << ")";
        return os.str();
    case TagKind::Arithmetic:
    case TagKind::ArithmeticLoad:
    case TagKind::ArithmeticStore:
        os << tag_kind_name(t.kind) << "(" << bin_name(t.op) << ", "
           << expr_to_text(t.a) << ", " << expr_to_text(t.b) << ")";
        return os.str();
    case TagKind::StoreMem:
        os << "StoreMem(" << expr_to_text(t.a) << ", " << expr_to_text(t.b) << ")";
        return os.str();
    }
    return "?";
}

SemanticTag parse_tag(const Arch &arch, const std::string &text) {
    SemanticTag t;
    size_t paren = text.find('(');
    std::string head = paren == std::string::npos ? text : text.substr(0, paren);
    t.kind = tag_kind_from_name(head);
    if (t.kind == TagKind::Nop || t.kind == TagKind::Undefined) {
        if (paren != std::string::npos)
            throw ValidationError("tag " + head + " takes no operands");
        return t;
    }
    if (paren == std::string::npos || text.back() != ')')
        throw ValidationError("malformed tag text: " + text);
    std::string body = text.substr(paren + 1, text.size() - paren - 2);

    // split on top-level commas
    std::vector<std::string> parts;
    int depth = 0;
    size_t start = 0;
    for (size_t i = 0; i <= body.size(); i++) {
        if (i == body.size() || (body[i] == ',' && depth == 0)) {
            parts.push_back(body.substr(start, i - start));
            start = i + 1;
        } else if (body[i] == '(')
            depth++;
        else if (body[i] == ')')
            depth--;
    }

    auto expr_at = [&](size_t i) { return parse_expr(arch, parts.at(i)); };
    switch (t.kind) {
    case TagKind::MovReg:
    case TagKind::LoadReg:
    case TagKind::LoadMem:
        if (parts.size() != 1)
            throw ValidationError("tag " + head + " takes one operand");
        t.a = expr_at(0);
        return t;
    case TagKind::StoreMem:
        if (parts.size() != 2)
            throw ValidationError("StoreMem takes two operands");
        t.a = expr_at(0);
        t.b = expr_at(1);
        return t;
    case TagKind::Arithmetic:
    case TagKind::ArithmeticLoad:
    case TagKind::ArithmeticStore: {
        if (parts.size() != 3)
            throw ValidationError("tag " + head + " takes an operator and two operands");
        std::string opname = parts[0];
        size_t a = opname.find_first_not_of(" \t");
        size_t b = opname.find_last_not_of(" \t");
        opname = opname.substr(a, b - a + 1);
        bool ok = false;
        for (int k = 0; k <= int(BinKind::Sge); k++)
            if (opname == bin_name(BinKind(k))) {
                t.op = BinKind(k);
                ok = true;
                break;
            }
        if (!ok)
            throw ValidationError("unknown operator in tag: " + opname);
        t.a = expr_at(1);
        t.b = expr_at(2);
        return t;
    }
    default:
        throw ValidationError("malformed tag text: " + text);
    }
}

namespace {

bool is_init(const ExprRef &e) { return e && e->kind == ExprKind::Init; }

bool is_init_or_const(const ExprRef &e) {
    return e && (e->kind == ExprKind::Init || e->kind == ExprKind::Const);
}

bool is_initial_load(const ExprRef &e) {
    return e && e->kind == ExprKind::MemSelect && e->a->kind == ExprKind::MemInit;
}

} // namespace

SemanticTag classify_register(const SymbolicSummary &summary, const Arch &arch,
                              const std::string &reg) {
    if (!arch.is_classifiable(reg))
        throw ValidationError("register " + reg + " is not classifiable");
    const ExprRef &e = summary.reg_out.at(reg);
    SemanticTag t;

    if (e->kind == ExprKind::Init) {
        if (e->name == reg) {
            t.kind = TagKind::Nop;
            return t;
        }
        t.kind = TagKind::MovReg;
        t.a = e;
        return t;
    }
    if (e->is_const()) {
        t.kind = TagKind::LoadReg;
        t.a = e;
        return t;
    }
    if (is_initial_load(e)) {
        t.kind = TagKind::LoadMem;
        t.a = e->b;
        return t;
    }
    if (e->kind == ExprKind::Bin) {
        if (is_init_or_const(e->a) && is_init_or_const(e->b)) {
            t.kind = TagKind::Arithmetic;
            t.op = e->bin;
            t.a = e->a;
            t.b = e->b;
            return t;
        }
        if (is_initial_load(e->a) && is_init_or_const(e->b)) {
            t.kind = TagKind::ArithmeticLoad;
            t.op = e->bin;
            t.a = e->a->b;
            t.b = e->b;
            return t;
        }
        if (is_initial_load(e->b) && is_init_or_const(e->a)) {
            t.kind = TagKind::ArithmeticLoad;
            t.op = e->bin;
            t.a = e->b->b;
            t.b = e->a;
            return t;
        }
    }
    t.kind = TagKind::Undefined;
    return t;
}

std::vector<SemanticTag> classify_memory_writes(const SymbolicSummary &summary) {
    // peel the store chain outermost-in, then report in write (execution)
    // order to line up with summary.writes
    std::vector<SemanticTag> peeled;
    ExprRef m = summary.mem_out;
    while (m && m->kind == ExprKind::MemStore) {
        const ExprRef &addr = m->b;
        const ExprRef &value = m->c;
        unsigned width = m->hi;
        SemanticTag t;
        if (is_init(value)) {
            t.kind = TagKind::StoreMem;
            t.a = addr;
            t.b = value;
        } else if (value->kind == ExprKind::Bin) {
            auto matches = [&](const ExprRef &x, const ExprRef &y) {
                return is_initial_load(x) && x->width == width &&
                       expr_equal(x->b, addr) && is_init_or_const(y);
            };
            if (matches(value->a, value->b)) {
                t.kind = TagKind::ArithmeticStore;
                t.op = value->bin;
                t.a = addr;
                t.b = value->b;
            } else if (matches(value->b, value->a)) {
                t.kind = TagKind::ArithmeticStore;
                t.op = value->bin;
                t.a = addr;
                t.b = value->a;
            } else {
                t.kind = TagKind::Undefined;
            }
        } else {
            t.kind = TagKind::Undefined;
        }
        peeled.push_back(std::move(t));
        m = m->a;
    }
    return {peeled.rbegin(), peeled.rend()};
}

bool key_less(const ComplexityKey &a, const ComplexityKey &b) {
    if (a.instr_count != b.instr_count)
        return a.instr_count < b.instr_count;
    if (a.mem_writes != b.mem_writes)
        return a.mem_writes < b.mem_writes;
    if (a.mem_reads != b.mem_reads)
        return a.mem_reads < b.mem_reads;
    return a.nops > b.nops; // more untouched registers ranks first
}

} // namespace gadgex
