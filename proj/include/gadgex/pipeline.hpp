#pragma once

#include "gadgex/program.hpp"
#include "gadgex/search.hpp"
#include "gadgex/store.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gadgex {

/// Batch configuration shared by the pipeline stages. Seed and budget are
/// recorded into the database header for reproducibility.
struct Config {
    std::vector<std::string> inputs; // .gcfg files
    std::string db_path;
    std::vector<std::string> db_paths; // search may consult several
    std::string query_path;
    std::string fixed_funcs_path;
    uint32_t max_len = 30;
    bool keep_duplicates = false;
    uint32_t budget = 4096;
    uint64_t seed = 0;
    unsigned workers = 1;
    uint32_t range = 1024; // analysis worker batch size
};

/// One symbol per line, '#' starts a comment.
std::set<std::string> load_fixed_functions(const std::string &path);

/// Exit codes shared by all commands: 0 success, 1 no result, 2 usage/IO
/// error.
int cmd_discover(const Config &cfg, std::ostream &out, std::ostream &err);
int cmd_analyze(const Config &cfg, std::ostream &out, std::ostream &err);
int cmd_search(const Config &cfg, std::ostream &out, std::ostream &err);
int cmd_stats(const Config &cfg, std::ostream &out, std::ostream &err);

/// Analysis of one discovered gadget: symbolic summary, tags, counts,
/// satisfiability. Exposed so tests and the analyze stage share one path.
GadgetRecord analyze_record(const Program &p, GadgetRecord rec, uint32_t budget,
                            uint64_t seed);

/// Builds an unanalyzed record from a discovered gadget path.
GadgetRecord record_from_path(const GadgetPath &g, uint64_t id,
                              const std::string &arch_name);

} // namespace gadgex
