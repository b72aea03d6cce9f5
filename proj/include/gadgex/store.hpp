#pragma once

#include "gadgex/arch.hpp"
#include "gadgex/classify.hpp"
#include "gadgex/discovery.hpp"
#include "gadgex/satcheck.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gadgex {

/// Requirement on one register's (or one memory write's) tag, shared by
/// database filters and query files. Address patterns match
/// `init(base) + offset` shapes of simplified equations.
struct TagRequirement {
    std::string reg; // empty for memory requirements
    TagKind kind = TagKind::Undefined;
    std::optional<std::string> src;      // MovReg / StoreMem source register
    std::optional<uint64_t> constant;    // LoadReg value / arithmetic operand
    std::optional<std::string> base;     // address base register
    std::optional<uint64_t> offset;      // address offset (base required)
    std::optional<BinKind> op;           // arithmetic kinds
    bool reg_operands_only = false;      // Arithmetic: both operands registers
};

/// One persisted gadget. Expressions are stored as micro-IR text and must
/// re-parse to structurally equal trees.
struct GadgetRecord {
    uint64_t id = 0;
    std::string module;
    std::string arch_name;
    std::string function;
    uint64_t function_entry = 0;
    PrefixKind prefix = PrefixKind::EP;
    SuffixKind suffix = SuffixKind::RET;
    ContentKind content = ContentKind::Arb;
    std::string fixed_symbol;
    std::vector<PathSeg> path;
    uint32_t instr_count = 0;
    uint64_t opcode_hash = 0;
    uint64_t start_addr = 0;
    uint64_t end_addr = 0;

    // analysis output (empty until the analyze stage runs)
    bool analyzed = false;
    std::map<std::string, std::string> reg_tags;   // register -> tag text
    std::vector<std::string> mem_tags;             // write order
    std::map<std::string, std::string> reg_out;    // register -> expression text
    struct WriteRec {
        std::string addr;
        std::string value;
        uint32_t width = 0;
        bool operator==(const WriteRec &) const = default;
    };
    std::vector<WriteRec> writes;
    std::vector<std::string> constraints;
    std::string suffix_target;
    uint32_t n_mem_writes = 0;
    uint32_t n_mem_reads = 0;
    uint32_t n_nop = 0;
    SatResult sat_status = SatResult::Unknown;
    std::vector<std::pair<std::string, uint64_t>> witness;

    ComplexityKey key() const {
        return {instr_count, n_mem_writes, n_mem_reads, n_nop};
    }

    bool operator==(const GadgetRecord &) const = default;
};

struct DbHeader {
    Arch arch;
    std::string module;
    uint64_t seed = 0;
    uint64_t budget = 0;
    uint32_t max_len = 0;
    bool keep_duplicates = false;
};

/// Excludes concurrent readers/writers while a writer owns the database.
class DbLock {
  public:
    explicit DbLock(const std::string &db_path);
    ~DbLock();
    DbLock(const DbLock &) = delete;
    DbLock &operator=(const DbLock &) = delete;

  private:
    std::string lock_path_;
};

/// Single-file gadget database: `GDB1` magic, header, length-prefixed
/// records, trailing id->offset index, and a footer with the index offset and
/// a whole-file checksum. Same inputs produce byte-identical files.
class GadgetDb {
  public:
    /// Writes a complete database. Records must carry unique ids and valid
    /// expression text (everything is re-parsed against the header arch).
    static void write(const std::string &path, const DbHeader &header,
                      const std::vector<GadgetRecord> &records);

    /// Opens and fully indexes a database; verifies the checksum. Fails with
    /// IoError while a writer holds the lock.
    static GadgetDb open(const std::string &path);

    const DbHeader &header() const { return header_; }
    size_t size() const { return records_.size(); }
    const std::vector<GadgetRecord> &records() const { return records_; }
    const GadgetRecord &get(uint64_t id) const;

    struct Filter {
        std::optional<PrefixKind> prefix;
        std::optional<SuffixKind> suffix;
        std::optional<ContentKind> content;
        std::optional<std::string> fixed_symbol; // with content == Fixed
        std::vector<TagRequirement> reg_requirements;
        std::vector<TagRequirement> mem_requirements;
        bool include_unverified = false; // keep UNSAT/UNKNOWN records
    };

    /// Matching record ids ordered by complexity key (ties broken on module
    /// and start address).
    std::vector<uint64_t> filter(const Filter &f) const;

  private:
    DbHeader header_;
    std::vector<GadgetRecord> records_;
    std::map<uint64_t, size_t> by_id_;
};

/// Validates record expression text against an arch; used by write().
void validate_record(const Arch &arch, const GadgetRecord &r);

bool tag_requirement_matches(const Arch &arch, const TagRequirement &req,
                             const SemanticTag &tag);

} // namespace gadgex
