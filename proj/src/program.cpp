#include "gadgex/program.hpp"

#include "gadgex/errors.hpp"

#include <algorithm>
#include <sstream>

namespace gadgex {

const char *instr_class_name(InstrClass c) {
    switch (c) {
    case InstrClass::FALL: return "FALL";
    case InstrClass::JUMP: return "JUMP";
    case InstrClass::COND: return "COND";
    case InstrClass::CALL: return "CALL";
    case InstrClass::ICALL: return "ICALL";
    case InstrClass::IJUMP: return "IJUMP";
    case InstrClass::RET: return "RET";
    }
    return "?";
}

InstrClass instr_class_from_name(const std::string &s) {
    if (s == "FALL") return InstrClass::FALL;
    if (s == "JUMP") return InstrClass::JUMP;
    if (s == "COND") return InstrClass::COND;
    if (s == "CALL") return InstrClass::CALL;
    if (s == "ICALL") return InstrClass::ICALL;
    if (s == "IJUMP") return InstrClass::IJUMP;
    if (s == "RET") return InstrClass::RET;
    throw ValidationError("unknown instruction class: " + s);
}

const char *edge_kind_name(EdgeKind k) {
    switch (k) {
    case EdgeKind::Taken: return "taken";
    case EdgeKind::Fallthrough: return "fallthrough";
    case EdgeKind::Unconditional: return "unconditional";
    }
    return "?";
}

EdgeKind edge_kind_from_name(const std::string &s) {
    if (s == "taken") return EdgeKind::Taken;
    if (s == "fallthrough") return EdgeKind::Fallthrough;
    if (s == "unconditional") return EdgeKind::Unconditional;
    throw ValidationError("unknown edge kind: " + s);
}

bool Instruction::operator==(const Instruction &o) const {
    return addr == o.addr && size == o.size && text == o.text && cls == o.cls &&
           call_target == o.call_target && ir == o.ir &&
           expr_equal(branch_cond, o.branch_cond);
}

std::map<uint64_t, std::vector<uint64_t>> predecessors(const Function &fn) {
    std::map<uint64_t, std::vector<uint64_t>> preds;
    for (const auto &[addr, bb] : fn.blocks)
        preds[addr]; // every block gets an entry
    for (const auto &[addr, bb] : fn.blocks)
        for (const Succ &s : bb.succs)
            preds[s.addr].push_back(addr);
    for (auto &[addr, lst] : preds) {
        std::sort(lst.begin(), lst.end());
        lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
    }
    return preds;
}

namespace {

std::string hexstr(uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

bool assigns_ip(const Arch &arch, const std::vector<Stmt> &ir) {
    for (const Stmt &s : ir)
        if (s.kind == Stmt::Kind::Assign && s.reg == arch.ip)
            return true;
    return false;
}

} // namespace

InstrClass classify_instruction(const Arch &arch, const Instruction &in) {
    switch (in.cls) {
    case InstrClass::CALL:
        if (!in.call_target)
            throw MalformedInstruction("CALL without call target at " + hexstr(in.addr));
        break;
    case InstrClass::ICALL:
    case InstrClass::IJUMP:
    case InstrClass::RET:
        if (in.call_target)
            throw MalformedInstruction(std::string(instr_class_name(in.cls)) +
                                       " carries a call target at " + hexstr(in.addr));
        if (!assigns_ip(arch, in.ir))
            throw MalformedInstruction(std::string(instr_class_name(in.cls)) +
                                       " never assigns the instruction pointer at " +
                                       hexstr(in.addr));
        break;
    case InstrClass::COND:
        if (!in.branch_cond)
            throw MalformedInstruction("COND without branch condition at " +
                                       hexstr(in.addr));
        if (in.branch_cond->width != 1)
            throw MalformedInstruction("branch condition must have width 1 at " +
                                       hexstr(in.addr));
        break;
    default:
        if (in.call_target)
            throw MalformedInstruction(std::string(instr_class_name(in.cls)) +
                                       " carries a call target at " + hexstr(in.addr));
        break;
    }
    if (in.cls != InstrClass::COND && in.branch_cond)
        throw MalformedInstruction("branch condition on non-COND instruction at " +
                                   hexstr(in.addr));
    return in.cls;
}

void validate_program(const Program &p) {
    p.arch.validate();
    for (const std::string &f : p.fixed_functions)
        if (f.empty())
            throw ValidationError("fixed function with empty name");

    std::set<uint64_t> entries;
    for (const Function &fn : p.functions) {
        if (!entries.insert(fn.entry).second)
            throw ValidationError("duplicate function entry " + hexstr(fn.entry));
        if (fn.blocks.find(fn.entry) == fn.blocks.end())
            throw ValidationError("function " + fn.name + ": entry block " +
                                  hexstr(fn.entry) + " missing");
        for (const auto &[addr, bb] : fn.blocks) {
            if (bb.addr != addr)
                throw ValidationError("block key/addr mismatch at " + hexstr(addr));
            if (bb.instrs.empty())
                throw ValidationError("empty block at " + hexstr(addr));
            if (bb.instrs.front().addr != bb.addr)
                throw ValidationError("block addr != first instruction addr at " +
                                      hexstr(addr));
            uint64_t prev = 0;
            bool first = true;
            for (size_t i = 0; i < bb.instrs.size(); i++) {
                const Instruction &in = bb.instrs[i];
                if (!first && in.addr <= prev)
                    throw ValidationError("instruction addresses not increasing at " +
                                          hexstr(in.addr));
                prev = in.addr;
                first = false;
                classify_instruction(p.arch, in);
                for (const Stmt &s : in.ir)
                    check_widths(p.arch, s);
                if (in.branch_cond)
                    check_widths(p.arch, in.branch_cond);
                bool last = i + 1 == bb.instrs.size();
                // calls may sit inside a block (execution silently resumes at
                // the return site); control transfers must terminate it
                if (!last && in.cls != InstrClass::FALL &&
                    in.cls != InstrClass::CALL && in.cls != InstrClass::ICALL)
                    throw ValidationError(std::string(instr_class_name(in.cls)) +
                                          " in block interior at " + hexstr(in.addr));
            }
            const Instruction &term = bb.terminator();
            for (const Succ &s : bb.succs)
                if (fn.blocks.find(s.addr) == fn.blocks.end())
                    throw ValidationError("successor " + hexstr(s.addr) +
                                          " does not resolve within function " +
                                          fn.name);
            switch (term.cls) {
            case InstrClass::COND: {
                if (bb.succs.size() != 2)
                    throw ValidationError("COND block at " + hexstr(addr) +
                                          " must have exactly two successors");
                bool taken = false, fall = false;
                for (const Succ &s : bb.succs) {
                    taken |= s.kind == EdgeKind::Taken;
                    fall |= s.kind == EdgeKind::Fallthrough;
                }
                if (!taken || !fall)
                    throw ValidationError("COND block at " + hexstr(addr) +
                                          " needs one taken and one fallthrough edge");
                break;
            }
            case InstrClass::CALL:
            case InstrClass::ICALL: {
                if (bb.succs.size() != 1 || bb.succs[0].kind != EdgeKind::Fallthrough)
                    throw ValidationError("call block at " + hexstr(addr) +
                                          " must fall through to the return block");
                if (bb.succs[0].addr != term.addr + term.size)
                    throw ValidationError("call block at " + hexstr(addr) +
                                          " falls through to a non-adjacent block");
                break;
            }
            case InstrClass::RET:
                if (!bb.succs.empty())
                    throw ValidationError("RET block at " + hexstr(addr) +
                                          " has successors");
                break;
            case InstrClass::JUMP:
                if (bb.succs.size() != 1)
                    throw ValidationError("JUMP block at " + hexstr(addr) +
                                          " must have exactly one successor");
                break;
            case InstrClass::FALL:
                if (bb.succs.size() != 1 || bb.succs[0].kind != EdgeKind::Fallthrough)
                    throw ValidationError("fallthrough block at " + hexstr(addr) +
                                          " must have one fallthrough successor");
                break;
            case InstrClass::IJUMP:
                // static jump-table edges are optional
                break;
            }
        }
    }
}

} // namespace gadgex
