#pragma once

#include "gadgex/frontend.hpp"
#include "gadgex/lifter.hpp"
#include "gadgex/program.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace gadgex::testing {

/// Assembles programs for tests: auto-addressing, lifting via the
/// mini-lifters, explicit successor edges.
class ProgramBuilder {
  public:
    ProgramBuilder(Arch arch, std::string module);

    ProgramBuilder &fixed(const std::string &symbol);
    ProgramBuilder &func(const std::string &name, uint64_t entry);
    ProgramBuilder &block(uint64_t addr);
    /// Lifts and appends; `call_target` names direct call/branch targets.
    ProgramBuilder &ins(const std::string &asm_text,
                        const std::string &call_target = "");
    ProgramBuilder &raw(Instruction in);
    /// Successor of the current block.
    ProgramBuilder &edge(uint64_t to, EdgeKind kind);

    uint64_t here() const { return next_addr_; }
    Program build() const;

  private:
    Program p_;
    uint64_t next_addr_ = 0;
    uint64_t cur_block_ = 0;
    uint32_t isize_;
};

/// Indirect-call gadget reached from a function entry: a guarded pair of
/// buffer loads ending in a register call, plus the skip arm. Used by the
/// ARM end-to-end scenario.
Program arm_buffer_call_fixture();

/// One function per gadget category; category counts are frozen in the
/// tests.
Program table1_program();

/// Two overlapping conditional load gadgets where the shorter arm pins the
/// loaded value to zero.
Program null_guard_program();

/// Seeded random x86-64 program for oracle and differential testing.
struct RandomProgramOptions {
    unsigned functions = 5;
    unsigned max_blocks = 8;
    bool fixed_calls = true;
    bool plain_calls = true;
    bool indirect_jumps = true;
};
Program random_program(uint64_t seed, const RandomProgramOptions &opt = {});

/// Unique scratch directory under the system temp dir; removed on scope
/// exit.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    std::string path(const std::string &name) const;
    const std::string &root() const { return root_; }

  private:
    std::string root_;
};

} // namespace gadgex::testing
