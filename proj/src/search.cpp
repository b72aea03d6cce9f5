#include "gadgex/search.hpp"

#include "gadgex/errors.hpp"
#include "gadgex/ir.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gadgex {

using json = nlohmann::ordered_json;

namespace {

uint64_t parse_value(const json &j, const char *what) {
    if (j.is_number_unsigned())
        return j.get<uint64_t>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        try {
            size_t used = 0;
            uint64_t v;
            if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0)
                v = std::stoull(s.substr(2), &used, 16), used += 2;
            else
                v = std::stoull(s, &used, 10);
            if (used == s.size())
                return v;
        } catch (...) {
        }
    }
    throw ValidationError(std::string(what) + ": expected a number or hex string");
}

BinKind binop_from_text(const std::string &s) {
    for (int k = 0; k <= int(BinKind::Sge); k++)
        if (s == bin_name(BinKind(k)))
            return BinKind(k);
    throw ValidationError("unknown operator: " + s);
}

TagRequirement parse_requirement(const json &j, bool memory) {
    TagRequirement req;
    if (!memory)
        req.reg = j.at("reg").get<std::string>();
    req.kind = tag_kind_from_name(j.at("tag").get<std::string>());
    if (j.contains("src"))
        req.src = j["src"].get<std::string>();
    if (j.contains("const"))
        req.constant = parse_value(j["const"], "requirement const");
    if (j.contains("base"))
        req.base = j["base"].get<std::string>();
    if (j.contains("offset"))
        req.offset = parse_value(j["offset"], "requirement offset");
    if (j.contains("op"))
        req.op = binop_from_text(j["op"].get<std::string>());
    if (j.contains("reg_operands_only"))
        req.reg_operands_only = j["reg_operands_only"].get<bool>();
    if (req.offset && !req.base)
        throw ValidationError("requirement offset needs a base register");
    return req;
}

} // namespace

GadgetQuery parse_query(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        size_t line = 1;
        for (size_t i = 0; i < e.byte && i < text.size(); i++)
            if (text[i] == '\n')
                line++;
        throw ParseError(line, e.what());
    }

    GadgetQuery q;
    if (doc.contains("prefix"))
        q.prefix = prefix_from_name(doc["prefix"].get<std::string>());
    if (doc.contains("suffix"))
        q.suffix = suffix_from_name(doc["suffix"].get<std::string>());
    if (doc.contains("content")) {
        std::string c = doc["content"].get<std::string>();
        if (c == "ARB")
            q.content = ContentKind::Arb;
        else if (c == "LOOP")
            q.content = ContentKind::Loop;
        else if (c == "F")
            q.content = ContentKind::Fixed;
        else if (c.rfind("F:", 0) == 0) {
            q.content = ContentKind::Fixed;
            q.fixed_symbol = c.substr(2);
        } else
            throw ValidationError("unknown content selector: " + c);
    }
    if (doc.contains("regs"))
        for (const json &r : doc["regs"])
            q.reg_requirements.push_back(parse_requirement(r, false));
    if (doc.contains("mem"))
        for (const json &r : doc["mem"])
            q.mem_requirements.push_back(parse_requirement(r, true));
    if (doc.contains("values"))
        for (const json &v : doc["values"]) {
            GadgetQuery::ValueConstraint vc;
            vc.reg = v.at("reg").get<std::string>();
            vc.value = parse_value(v.at("equals"), "value constraint");
            q.value_constraints.push_back(std::move(vc));
        }
    if (doc.contains("max_results"))
        q.max_results = doc["max_results"].get<size_t>();

    if (!q.prefix && !q.suffix && !q.content && q.reg_requirements.empty() &&
        q.mem_requirements.empty() && q.value_constraints.empty())
        throw ValidationError("query has no requirements");
    return q;
}

GadgetQuery load_query_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open query file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_query(ss.str());
}

void validate_query(const GadgetQuery &q, const Arch &arch) {
    auto check_reg = [&](const std::string &r, const char *what) {
        if (!arch.has_reg(r))
            throw UnknownRegister(std::string(what) + ": unknown register " + r);
    };
    for (const TagRequirement &req : q.reg_requirements) {
        check_reg(req.reg, "requirement");
        if (req.src)
            check_reg(*req.src, "requirement src");
        if (req.base)
            check_reg(*req.base, "requirement base");
    }
    for (const TagRequirement &req : q.mem_requirements) {
        if (req.src)
            check_reg(*req.src, "requirement src");
        if (req.base)
            check_reg(*req.base, "requirement base");
    }
    for (const auto &vc : q.value_constraints)
        check_reg(vc.reg, "value constraint");
    if (q.fixed_symbol && q.fixed_symbol->empty())
        throw UnknownSymbol("empty fixed-function symbol in query");
}

std::vector<Candidate> run_query(const std::vector<const GadgetDb *> &dbs,
                                 const GadgetQuery &q) {
    for (size_t di = 0; di < dbs.size(); di++) {
        const GadgetDb &db = *dbs[di];
        validate_query(q, db.header().arch);
        GadgetDb::Filter f;
        f.prefix = q.prefix;
        f.suffix = q.suffix;
        f.content = q.content;
        f.fixed_symbol = q.fixed_symbol;
        f.reg_requirements = q.reg_requirements;
        f.mem_requirements = q.mem_requirements;
        std::vector<uint64_t> ids = db.filter(f);
        if (ids.empty())
            continue;
        if (ids.size() > q.max_results)
            ids.resize(q.max_results);
        std::vector<Candidate> out;
        for (uint64_t id : ids)
            out.push_back({di, id});
        return out; // first database with candidates wins
    }
    return {};
}

std::vector<ExprRef> value_constraint_exprs(const GadgetDb &db, const GadgetRecord &r,
                                            const GadgetQuery &q) {
    const Arch &arch = db.header().arch;
    std::vector<ExprRef> out;
    for (const auto &vc : q.value_constraints) {
        auto it = r.reg_out.find(vc.reg);
        if (it == r.reg_out.end())
            throw UnknownRegister("record has no output equation for " + vc.reg);
        ExprRef final_value = parse_expr(arch, it->second);
        out.push_back(make_bin(BinKind::Eq, final_value,
                               make_const(final_value->width,
                                          mask_width(final_value->width, vc.value))));
    }
    return out;
}

std::optional<VerifiedGadget>
verify_until_satisfiable(const std::vector<const GadgetDb *> &dbs,
                         const std::vector<Candidate> &candidates,
                         const GadgetQuery &q, uint32_t budget, uint64_t seed) {
    for (const Candidate &c : candidates) {
        const GadgetDb &db = *dbs[c.db_index];
        const GadgetRecord &r = db.get(c.id);
        const Arch &arch = db.header().arch;
        std::vector<ExprRef> path_constraints;
        for (const auto &text : r.constraints)
            path_constraints.push_back(parse_expr(arch, text));
        std::vector<ExprRef> extra = value_constraint_exprs(db, r, q);
        SatStatus st =
            check_satisfiable(arch, path_constraints, extra, budget, seed ^ c.id);
        if (st.result == SatResult::Sat)
            return VerifiedGadget{c, std::move(st.witness)};
        // Unsat and Unknown both disqualify this candidate
    }
    return std::nullopt;
}

} // namespace gadgex
