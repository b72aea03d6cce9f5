#pragma once

#include "gadgex/program.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gadgex {

enum class PrefixKind : uint8_t { EP, CS };
enum class SuffixKind : uint8_t { IC, IJ, RET };
enum class ContentKind : uint8_t { Arb, Fixed, Loop };

const char *prefix_name(PrefixKind p);
const char *suffix_name(SuffixKind s);
const char *content_name(ContentKind c);
PrefixKind prefix_from_name(const std::string &s);
SuffixKind suffix_from_name(const std::string &s);

struct PoiEntry {
    const Function *fn;
    uint64_t block;
    uint32_t index;
    std::string callee; // fixed calls only

    uint64_t addr(const Program &p) const;
};

/// Points of interest: gadget endpoints (rets/icalls/ijumps) and the call
/// instructions that bound gadget starts. Lists are in ascending instruction
/// address order; fixed_calls is the subset of calls whose target is in the
/// program's fixed-function set.
struct PoiIndex {
    std::vector<PoiEntry> rets, icalls, ijumps, calls, fixed_calls;
};

PoiIndex scan_points_of_interest(const Program &p);

struct PathSeg {
    uint64_t block;
    uint32_t first, last; // instruction index range, inclusive
    bool operator==(const PathSeg &) const = default;
};

struct GadgetPath {
    PrefixKind prefix = PrefixKind::EP;
    SuffixKind suffix = SuffixKind::RET;
    ContentKind content = ContentKind::Arb;
    std::string fixed_symbol; // content == Fixed
    std::vector<PathSeg> path;
    uint32_t instr_count = 0;
    std::string module;
    std::string function;
    uint64_t function_entry = 0;
    uint64_t start_addr = 0;
    uint64_t end_addr = 0;
    uint64_t opcode_hash = 0;

    bool operator==(const GadgetPath &) const = default;
};

/// Walks every CFG path backwards from each endpoint, emitting gadgets at the
/// CFI-legitimate start boundaries (function entries and call sites). Fixed
/// function calls split the path and traversal continues past them; plain
/// calls stop it. A path closing back onto an indirect-call endpoint yields a
/// loop gadget. Results are sorted by (start_addr, end_addr, instr_count) and
/// are deterministic for any worker count.
std::vector<GadgetPath> extract_gadgets(const Program &p, const PoiIndex &poi,
                                        uint32_t max_len, unsigned workers = 1);

/// Drops gadgets whose opcode sequence already occurred (first by ascending
/// start address wins), unless keep_duplicates is set.
std::vector<GadgetPath> dedup(std::vector<GadgetPath> gadgets, bool keep_duplicates);

uint64_t opcode_hash_of(const Program &p, const Function &fn,
                        const std::vector<PathSeg> &path);

/// Collects the instructions covered by a path, in execution order.
std::vector<const Instruction *> path_instructions(const Function &fn,
                                                   const std::vector<PathSeg> &path);

const Function *find_function(const Program &p, uint64_t entry);

} // namespace gadgex
