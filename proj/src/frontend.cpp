#include "gadgex/frontend.hpp"

#include "gadgex/errors.hpp"
#include "gadgex/lifter.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gadgex {

using json = nlohmann::ordered_json;

namespace {

uint64_t parse_addr(const json &j, const char *what) {
    if (!j.is_string())
        throw ValidationError(std::string(what) + ": addresses must be hex strings");
    std::string s = j.get<std::string>();
    if (s.rfind("0x", 0) != 0 && s.rfind("0X", 0) != 0)
        throw ValidationError(std::string(what) + ": address '" + s +
                              "' lacks 0x prefix");
    try {
        size_t used = 0;
        uint64_t v = std::stoull(s.substr(2), &used, 16);
        if (used != s.size() - 2)
            throw ValidationError(std::string(what) + ": bad address '" + s + "'");
        return v;
    } catch (const ValidationError &) {
        throw;
    } catch (...) {
        throw ValidationError(std::string(what) + ": bad address '" + s + "'");
    }
}

std::string addr_str(uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

const json &field(const json &j, const char *key, const char *ctx) {
    auto it = j.find(key);
    if (it == j.end())
        throw ValidationError(std::string(ctx) + ": missing key \"" + key + "\"");
    return *it;
}

Arch parse_arch(const json &j) {
    Arch a;
    a.name = field(j, "name", "arch").get<std::string>();
    a.bits = field(j, "bits", "arch").get<unsigned>();
    std::string e = field(j, "endianness", "arch").get<std::string>();
    if (e == "little")
        a.endianness = Endian::Little;
    else if (e == "big")
        a.endianness = Endian::Big;
    else
        throw ValidationError("arch: endianness must be little or big");
    for (const json &r : field(j, "registers", "arch")) {
        if (!r.is_array() || r.size() != 2)
            throw ValidationError("arch: registers must be [name, width] pairs");
        a.registers.emplace_back(r[0].get<std::string>(), r[1].get<unsigned>());
    }
    a.sp = field(j, "sp", "arch").get<std::string>();
    a.ip = field(j, "ip", "arch").get<std::string>();
    for (const json &r : field(j, "classifiable", "arch"))
        a.classifiable.push_back(r.get<std::string>());
    return a;
}

Instruction parse_instr(const Arch &arch, const json &j) {
    Instruction in;
    in.addr = parse_addr(field(j, "addr", "instruction"), "instruction");
    in.size = field(j, "size", "instruction").get<uint32_t>();
    in.text = field(j, "asm", "instruction").get<std::string>();
    in.cls = instr_class_from_name(field(j, "class", "instruction").get<std::string>());
    if (j.contains("call_target"))
        in.call_target = j["call_target"].get<std::string>();

    bool have_ir = j.contains("ir");
    bool have_cond = j.contains("cond");
    if (have_ir) {
        for (const json &s : j["ir"])
            in.ir.push_back(parse_stmt(arch, s.get<std::string>()));
        if (have_cond)
            in.branch_cond = parse_expr(arch, j["cond"].get<std::string>());
    } else {
        LiftResult lr = lift_instruction(arch, in.text, in.addr, in.size);
        if (lr.cls != in.cls)
            throw MalformedInstruction(
                "instruction at " + addr_str(in.addr) + " ('" + in.text +
                "') declares class " + instr_class_name(in.cls) +
                " but lifts to " + instr_class_name(lr.cls));
        in.ir = std::move(lr.ir);
        in.branch_cond = have_cond ? parse_expr(arch, j["cond"].get<std::string>())
                                   : lr.cond;
    }
    return in;
}

} // namespace

Program parse_program(const std::string &document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const nlohmann::json::parse_error &e) {
        // byte offset -> line number for the diagnostic
        size_t line = 1;
        for (size_t i = 0; i < e.byte && i < document.size(); i++)
            if (document[i] == '\n')
                line++;
        throw ParseError(line, e.what());
    }

    Program p;
    p.arch = parse_arch(field(doc, "arch", "document"));
    p.arch.validate();
    p.module_name = field(doc, "module", "document").get<std::string>();
    if (doc.contains("fixed_functions"))
        for (const json &f : doc["fixed_functions"])
            p.fixed_functions.insert(f.get<std::string>());

    for (const json &jf : field(doc, "functions", "document")) {
        Function fn;
        fn.name = field(jf, "name", "function").get<std::string>();
        fn.entry = parse_addr(field(jf, "entry", "function"), "function entry");
        for (const json &jb : field(jf, "blocks", "function")) {
            BasicBlock bb;
            bb.addr = parse_addr(field(jb, "addr", "block"), "block");
            for (const json &ji : field(jb, "instrs", "block"))
                bb.instrs.push_back(parse_instr(p.arch, ji));
            for (const json &js : field(jb, "succs", "block")) {
                Succ s;
                s.addr = parse_addr(field(js, "addr", "succ"), "succ");
                s.kind = edge_kind_from_name(field(js, "kind", "succ").get<std::string>());
                bb.succs.push_back(s);
            }
            if (!fn.blocks.emplace(bb.addr, std::move(bb)).second)
                throw ValidationError("duplicate block at " + addr_str(bb.addr));
        }
        p.functions.push_back(std::move(fn));
    }

    validate_program(p);
    return p;
}

std::string serialize_program(const Program &p) {
    json doc;
    json arch;
    arch["name"] = p.arch.name;
    arch["bits"] = p.arch.bits;
    arch["endianness"] = p.arch.endianness == Endian::Little ? "little" : "big";
    json regs = json::array();
    for (const auto &[n, w] : p.arch.registers)
        regs.push_back(json::array({n, w}));
    arch["registers"] = regs;
    arch["sp"] = p.arch.sp;
    arch["ip"] = p.arch.ip;
    arch["classifiable"] = p.arch.classifiable;
    doc["arch"] = arch;
    doc["module"] = p.module_name;
    doc["fixed_functions"] = p.fixed_functions;

    json fns = json::array();
    for (const Function &fn : p.functions) {
        json jf;
        jf["name"] = fn.name;
        jf["entry"] = addr_str(fn.entry);
        json blocks = json::array();
        for (const auto &[addr, bb] : fn.blocks) {
            json jb;
            jb["addr"] = addr_str(bb.addr);
            json instrs = json::array();
            for (const Instruction &in : bb.instrs) {
                json ji;
                ji["addr"] = addr_str(in.addr);
                ji["size"] = in.size;
                ji["asm"] = in.text;
                ji["class"] = instr_class_name(in.cls);
                if (in.call_target)
                    ji["call_target"] = *in.call_target;
                if (in.branch_cond)
                    ji["cond"] = expr_to_text(in.branch_cond);
                json ir = json::array();
                for (const Stmt &s : in.ir)
                    ir.push_back(stmt_to_text(s));
                ji["ir"] = ir;
                instrs.push_back(std::move(ji));
            }
            jb["instrs"] = instrs;
            json succs = json::array();
            for (const Succ &s : bb.succs) {
                json js;
                js["addr"] = addr_str(s.addr);
                js["kind"] = edge_kind_name(s.kind);
                succs.push_back(std::move(js));
            }
            jb["succs"] = succs;
            blocks.push_back(std::move(jb));
        }
        jf["blocks"] = blocks;
        fns.push_back(std::move(jf));
    }
    doc["functions"] = fns;
    return doc.dump(2) + "\n";
}

Program load_program_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_program(ss.str());
}

} // namespace gadgex
