#include "gadgex/pipeline.hpp"

#include "gadgex/classify.hpp"
#include "gadgex/errors.hpp"
#include "gadgex/frontend.hpp"
#include "gadgex/symexec.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace gadgex {

namespace {

// splitmix64; derives per-record seeds from the run seed
uint64_t mix_seed(uint64_t seed, uint64_t id) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<Program> load_programs(const Config &cfg) {
    if (cfg.inputs.empty())
        throw IoError("no input files given");
    std::vector<Program> programs;
    for (const std::string &path : cfg.inputs)
        programs.push_back(load_program_file(path));
    return programs;
}

const Program *program_for(const std::vector<Program> &programs,
                           const std::string &module) {
    for (const Program &p : programs)
        if (p.module_name == module)
            return &p;
    return nullptr;
}

struct CategoryCounts {
    // six (prefix, suffix) rows plus loops, Table-2 shaped
    std::map<std::pair<PrefixKind, SuffixKind>, uint64_t> rows;
    uint64_t loops = 0;

    void add(PrefixKind p, SuffixKind s, ContentKind c) {
        if (c == ContentKind::Loop)
            loops++;
        else
            rows[{p, s}]++;
    }

    void print(std::ostream &out, double runtime_s) const {
        static const std::pair<PrefixKind, SuffixKind> order[] = {
            {PrefixKind::EP, SuffixKind::IC},  {PrefixKind::EP, SuffixKind::IJ},
            {PrefixKind::EP, SuffixKind::RET}, {PrefixKind::CS, SuffixKind::IC},
            {PrefixKind::CS, SuffixKind::IJ},  {PrefixKind::CS, SuffixKind::RET},
        };
        for (const auto &key : order) {
            auto it = rows.find(key);
            uint64_t n = it == rows.end() ? 0 : it->second;
            out << std::left << std::setw(12)
                << (std::string(prefix_name(key.first)) + "-" +
                    suffix_name(key.second))
                << n << "\n";
        }
        out << std::left << std::setw(12) << "Loops" << loops << "\n";
        out << std::left << std::setw(12) << "Runtime (s)" << std::fixed
            << std::setprecision(1) << runtime_s << "\n";
    }
};

} // namespace

std::set<std::string> load_fixed_functions(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open fixed-function file: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos)
            continue;
        size_t b = line.find_last_not_of(" \t\r");
        out.insert(line.substr(a, b - a + 1));
    }
    return out;
}

GadgetRecord record_from_path(const GadgetPath &g, uint64_t id,
                              const std::string &arch_name) {
    GadgetRecord r;
    r.id = id;
    r.module = g.module;
    r.arch_name = arch_name;
    r.function = g.function;
    r.function_entry = g.function_entry;
    r.prefix = g.prefix;
    r.suffix = g.suffix;
    r.content = g.content;
    r.fixed_symbol = g.fixed_symbol;
    r.path = g.path;
    r.instr_count = g.instr_count;
    r.opcode_hash = g.opcode_hash;
    r.start_addr = g.start_addr;
    r.end_addr = g.end_addr;
    return r;
}

GadgetRecord analyze_record(const Program &p, GadgetRecord rec, uint32_t budget,
                            uint64_t seed) {
    GadgetPath g;
    g.prefix = rec.prefix;
    g.suffix = rec.suffix;
    g.content = rec.content;
    g.fixed_symbol = rec.fixed_symbol;
    g.path = rec.path;
    g.instr_count = rec.instr_count;
    g.module = rec.module;
    g.function = rec.function;
    g.function_entry = rec.function_entry;
    g.start_addr = rec.start_addr;
    g.end_addr = rec.end_addr;

    SymbolicSummary sum = execute_symbolic(p, g);

    rec.analyzed = true;
    rec.reg_tags.clear();
    rec.reg_out.clear();
    rec.mem_tags.clear();
    rec.writes.clear();
    rec.constraints.clear();
    rec.witness.clear();
    rec.n_nop = 0;
    for (const std::string &r : p.arch.classifiable) {
        SemanticTag tag = classify_register(sum, p.arch, r);
        if (tag.kind == TagKind::Nop)
            rec.n_nop++;
        rec.reg_tags[r] = tag_to_text(tag);
        rec.reg_out[r] = expr_to_text(sum.reg_out.at(r));
    }
    for (const SemanticTag &t : classify_memory_writes(sum))
        rec.mem_tags.push_back(tag_to_text(t));
    for (const auto &w : sum.writes)
        rec.writes.push_back(
            {expr_to_text(w.addr), expr_to_text(w.value), w.width});
    for (const auto &c : sum.constraints)
        rec.constraints.push_back(expr_to_text(c));
    rec.suffix_target = expr_to_text(sum.suffix_target);
    rec.n_mem_writes = uint32_t(sum.writes.size());
    rec.n_mem_reads = sum.n_mem_reads;

    SatStatus st = check_satisfiable(p.arch, sum.constraints, {}, budget,
                                     mix_seed(seed, rec.id));
    rec.sat_status = st.result;
    for (const auto &[term, value] : st.witness.terms)
        rec.witness.emplace_back(expr_to_text(term), value);
    return rec;
}

int cmd_discover(const Config &cfg, std::ostream &out, std::ostream &err) {
    try {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<Program> programs = load_programs(cfg);
        if (cfg.db_path.empty())
            throw IoError("no database path given");

        std::set<std::string> extra_fixed;
        if (!cfg.fixed_funcs_path.empty())
            extra_fixed = load_fixed_functions(cfg.fixed_funcs_path);

        std::vector<GadgetRecord> records;
        uint64_t next_id = 1;
        CategoryCounts counts;
        // one database per module set; the header carries the first program's
        // arch, and mixing architectures in one run is rejected
        for (Program &p : programs) {
            p.fixed_functions.insert(extra_fixed.begin(), extra_fixed.end());
            if (!(p.arch == programs.front().arch))
                throw ValidationError(
                    "all inputs of one run must share an architecture");
            PoiIndex poi = scan_points_of_interest(p);
            std::vector<GadgetPath> gadgets =
                dedup(extract_gadgets(p, poi, cfg.max_len, cfg.workers),
                      cfg.keep_duplicates);
            for (const GadgetPath &g : gadgets) {
                counts.add(g.prefix, g.suffix, g.content);
                records.push_back(record_from_path(g, next_id++, p.arch.name));
            }
        }

        DbHeader header;
        header.arch = programs.front().arch;
        header.module = programs.size() == 1 ? programs.front().module_name : "";
        header.seed = cfg.seed;
        header.budget = cfg.budget;
        header.max_len = cfg.max_len;
        header.keep_duplicates = cfg.keep_duplicates;
        GadgetDb::write(cfg.db_path, header, records);

        auto t1 = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(t1 - t0).count();
        out << "discovered " << records.size() << " gadgets\n";
        counts.print(out, secs);
        return 0;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_analyze(const Config &cfg, std::ostream &out, std::ostream &err) {
    try {
        std::vector<Program> programs = load_programs(cfg);
        if (cfg.db_path.empty())
            throw IoError("no database path given");
        GadgetDb db = GadgetDb::open(cfg.db_path);

        std::vector<GadgetRecord> records = db.records();
        // bounded worker pool over id ranges keeps peak memory flat
        std::atomic<size_t> cursor{0};
        std::atomic<bool> failed{false};
        std::string failure;
        std::mutex failure_mu;
        size_t range = std::max<uint32_t>(1, cfg.range);
        auto worker = [&] {
            for (;;) {
                size_t begin = cursor.fetch_add(range);
                if (begin >= records.size() || failed.load())
                    return;
                size_t end = std::min(records.size(), begin + range);
                for (size_t i = begin; i < end; i++) {
                    try {
                        const Program *p = program_for(programs, records[i].module);
                        if (!p)
                            throw IoError("no input provides module " +
                                          records[i].module);
                        records[i] =
                            analyze_record(*p, records[i], cfg.budget, cfg.seed);
                    } catch (const std::exception &e) {
                        std::lock_guard<std::mutex> lk(failure_mu);
                        failure = e.what();
                        failed.store(true);
                        return;
                    }
                }
            }
        };
        unsigned n = std::max(1u, cfg.workers);
        if (n == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < n; t++)
                pool.emplace_back(worker);
            for (auto &t : pool)
                t.join();
        }
        if (failed.load())
            throw IoError("analysis failed: " + failure);

        DbHeader header = db.header();
        header.seed = cfg.seed;
        header.budget = cfg.budget;
        GadgetDb::write(cfg.db_path, header, records);

        uint64_t sat = 0, unsat = 0, unknown = 0;
        for (const auto &r : records)
            (r.sat_status == SatResult::Sat
                 ? sat
                 : r.sat_status == SatResult::Unsat ? unsat : unknown)++;
        out << "analyzed " << records.size() << " gadgets: " << sat << " satisfiable, "
            << unsat << " unsatisfiable, " << unknown << " unknown\n";
        return 0;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_search(const Config &cfg, std::ostream &out, std::ostream &err) {
    try {
        if (cfg.db_paths.empty())
            throw IoError("no database path given");
        if (cfg.query_path.empty())
            throw IoError("no query file given");
        GadgetQuery query = load_query_file(cfg.query_path);

        std::vector<GadgetDb> dbs;
        for (const std::string &path : cfg.db_paths)
            dbs.push_back(GadgetDb::open(path));
        std::vector<const GadgetDb *> db_ptrs;
        for (const GadgetDb &db : dbs)
            db_ptrs.push_back(&db);

        std::vector<Candidate> candidates = run_query(db_ptrs, query);
        auto hit =
            verify_until_satisfiable(db_ptrs, candidates, query, cfg.budget, cfg.seed);
        if (!hit) {
            out << "no gadget satisfies the query\n";
            return 1;
        }
        const GadgetDb &db = *db_ptrs[hit->candidate.db_index];
        const GadgetRecord &r = db.get(hit->candidate.id);
        out << "gadget #" << r.id << " " << r.module << " " << r.function << " 0x"
            << std::hex << r.start_addr << "..0x" << r.end_addr << std::dec << " "
            << prefix_name(r.prefix) << "-" << content_name(r.content);
        if (r.content == ContentKind::Fixed)
            out << "(" << r.fixed_symbol << ")";
        out << "-" << suffix_name(r.suffix) << " (" << r.instr_count
            << " instructions)\n";
        out << "  path:";
        for (const PathSeg &s : r.path)
            out << " 0x" << std::hex << s.block << std::dec << "[" << s.first << ".."
                << s.last << "]";
        out << "\n";
        for (const auto &[reg, tag] : r.reg_tags)
            if (tag != "NOP")
                out << "  " << reg << ": " << tag << "\n";
        for (const auto &t : r.mem_tags)
            out << "  write: " << t << "\n";
        if (hit->witness.terms.empty())
            out << "  witness: (unconstrained)\n";
        else {
            out << "  witness:\n";
            for (const auto &[term, value] : hit->witness.terms)
                out << "    " << expr_to_text(term) << " = 0x" << std::hex << value
                    << std::dec << "\n";
        }
        return 0;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_stats(const Config &cfg, std::ostream &out, std::ostream &err) {
    try {
        auto t0 = std::chrono::steady_clock::now();
        if (cfg.db_path.empty())
            throw IoError("no database path given");
        GadgetDb db = GadgetDb::open(cfg.db_path);
        CategoryCounts counts;
        for (const GadgetRecord &r : db.records())
            counts.add(r.prefix, r.suffix, r.content);
        auto t1 = std::chrono::steady_clock::now();
        counts.print(out, std::chrono::duration<double>(t1 - t0).count());
        return 0;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace gadgex
