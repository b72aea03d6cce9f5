#include "fixtures.hpp"

#include "gadgex/errors.hpp"

#include <atomic>
#include <sstream>
#include <unistd.h>

namespace gadgex::testing {

ProgramBuilder::ProgramBuilder(Arch arch, std::string module) {
    p_.arch = std::move(arch);
    p_.module_name = std::move(module);
    isize_ = p_.arch.bits == 64 ? 2 : 4;
}

ProgramBuilder &ProgramBuilder::fixed(const std::string &symbol) {
    p_.fixed_functions.insert(symbol);
    return *this;
}

ProgramBuilder &ProgramBuilder::func(const std::string &name, uint64_t entry) {
    Function fn;
    fn.name = name;
    fn.entry = entry;
    p_.functions.push_back(std::move(fn));
    next_addr_ = entry;
    return *this;
}

ProgramBuilder &ProgramBuilder::block(uint64_t addr) {
    Function &fn = p_.functions.back();
    BasicBlock bb;
    bb.addr = addr;
    fn.blocks.emplace(addr, std::move(bb));
    cur_block_ = addr;
    next_addr_ = addr;
    return *this;
}

ProgramBuilder &ProgramBuilder::ins(const std::string &asm_text,
                                    const std::string &call_target) {
    LiftResult lr = lift_instruction(p_.arch, asm_text, next_addr_, isize_);
    Instruction in;
    in.addr = next_addr_;
    in.size = isize_;
    in.text = asm_text;
    in.cls = lr.cls;
    in.ir = std::move(lr.ir);
    in.branch_cond = lr.cond;
    if (!call_target.empty())
        in.call_target = call_target;
    return raw(std::move(in));
}

ProgramBuilder &ProgramBuilder::raw(Instruction in) {
    BasicBlock &bb = p_.functions.back().blocks.at(cur_block_);
    bb.instrs.push_back(std::move(in));
    next_addr_ = bb.instrs.back().addr + bb.instrs.back().size;
    return *this;
}

ProgramBuilder &ProgramBuilder::edge(uint64_t to, EdgeKind kind) {
    p_.functions.back().blocks.at(cur_block_).succs.push_back({to, kind});
    return *this;
}

Program ProgramBuilder::build() const {
    validate_program(p_);
    return p_;
}

Program arm_buffer_call_fixture() {
    ProgramBuilder b(arm_a32_arch(), "libc_arm");
    b.func("sub_71704", 0x71704);
    b.block(0x71704)
        .ins("LDR R3, [R0]")
        .ins("TST R3, #1")
        .ins("BEQ 0x71720")
        .edge(0x71720, EdgeKind::Taken)
        .edge(0x71710, EdgeKind::Fallthrough);
    b.block(0x71710)
        .ins("LDR R12, [R0,#0xA4]")
        .ins("LDR R0, [R0,#0x1C]")
        .ins("BLX R12")
        .edge(0x7171c, EdgeKind::Fallthrough);
    b.block(0x7171c).ins("BX LR");
    b.block(0x71720).ins("MOV R0, #0").ins("BX LR");
    return b.build();
}

Program table1_program() {
    ProgramBuilder b(x86_64_arch(), "planted");
    b.fixed("VirtualProtect");

    b.func("ep_ret", 0x1000);
    b.block(0x1000).ins("xor rax, rax").ins("ret");

    b.func("cs_ret", 0x1100);
    b.block(0x1100)
        .ins("mov rax, rbx")
        .ins("call helper", "helper")
        .edge(0x1104, EdgeKind::Fallthrough);
    b.block(0x1104).ins("pop rbx").ins("ret");

    b.func("ep_ic", 0x1200);
    b.block(0x1200).ins("mov rdi, rax").ins("call rbx").edge(0x1204,
                                                             EdgeKind::Fallthrough);
    b.block(0x1204).ins("mov r9, r9").ins("ret");

    b.func("ep_ij", 0x1300);
    b.block(0x1300).ins("mov rax, rcx").ins("jmp rax");

    b.func("ep_f_ret", 0x1400);
    b.block(0x1400)
        .ins("mov rcx, 0x40")
        .ins("call VirtualProtect", "VirtualProtect")
        .edge(0x1404, EdgeKind::Fallthrough);
    b.block(0x1404).ins("xor rdx, rdx").ins("ret");

    b.func("cs_f_ret", 0x1500);
    b.block(0x1500).ins("call helper2", "helper2").edge(0x1502, EdgeKind::Fallthrough);
    b.block(0x1502)
        .ins("mov rdi, rsp")
        .ins("call VirtualProtect", "VirtualProtect")
        .edge(0x1506, EdgeKind::Fallthrough);
    b.block(0x1506).ins("pop rcx").ins("ret");

    b.func("ep_f_ic", 0x1600);
    b.block(0x1600)
        .ins("call VirtualProtect", "VirtualProtect")
        .edge(0x1602, EdgeKind::Fallthrough);
    b.block(0x1602).ins("mov rsi, rax").ins("call rdx").edge(0x1606,
                                                             EdgeKind::Fallthrough);
    b.block(0x1606).ins("mov r10, r10").ins("ret");

    b.func("ep_f_ij", 0x1700);
    b.block(0x1700)
        .ins("call VirtualProtect", "VirtualProtect")
        .edge(0x1702, EdgeKind::Fallthrough);
    b.block(0x1702).ins("mov r11, rbx").ins("jmp rdx");

    b.func("cs_f_ic", 0x1800);
    b.block(0x1800).ins("call helper3", "helper3").edge(0x1802, EdgeKind::Fallthrough);
    b.block(0x1802)
        .ins("call VirtualProtect", "VirtualProtect")
        .edge(0x1804, EdgeKind::Fallthrough);
    b.block(0x1804).ins("mov rdi, rbx").ins("call rax").edge(0x1808,
                                                             EdgeKind::Fallthrough);
    b.block(0x1808).ins("mov r12, r12").ins("ret");

    b.func("cs_f_ij", 0x1900);
    b.block(0x1900).ins("call helper4", "helper4").edge(0x1902, EdgeKind::Fallthrough);
    b.block(0x1902)
        .ins("call VirtualProtect", "VirtualProtect")
        .edge(0x1904, EdgeKind::Fallthrough);
    b.block(0x1904).ins("pop rdi").ins("jmp rcx");

    b.func("loop", 0x2000);
    b.block(0x2000).ins("mov rbx, rdi").edge(0x2002, EdgeKind::Fallthrough);
    b.block(0x2002)
        .ins("mov rax, [rbx]")
        .ins("add rbx, 0x8")
        .ins("call rax")
        .edge(0x2008, EdgeKind::Fallthrough);
    b.block(0x2008)
        .ins("and rbx, rbx")
        .ins("jne 0x2002")
        .edge(0x2002, EdgeKind::Taken)
        .edge(0x200c, EdgeKind::Fallthrough);
    b.block(0x200c).ins("pop rbp").ins("ret");

    return b.build();
}

Program null_guard_program() {
    ProgramBuilder b(x86_64_arch(), "nullguard");
    b.func("guarded_load", 0x3000);
    b.block(0x3000).ins("call helperA", "helperA").edge(0x3002, EdgeKind::Fallthrough);
    b.block(0x3002)
        .ins("mov rax, [rdi]")
        .ins("and rax, rax")
        .ins("je 0x300c")
        .edge(0x300c, EdgeKind::Taken)
        .edge(0x3008, EdgeKind::Fallthrough);
    b.block(0x3008).ins("mov rbx, 0x1").ins("ret");
    b.block(0x300c).ins("ret");
    return b.build();
}

namespace {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(uint64_t seed) : eng(seed) {}
    uint64_t next() { return eng(); }
    uint64_t below(uint64_t n) { return n == 0 ? 0 : eng() % n; }
    bool chance(unsigned percent) { return below(100) < percent; }
};

const char *kRegs[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi",
                       "r8",  "r9",  "r10", "r11", "r12", "r13"};

std::string reg(Rng &r) { return kRegs[r.below(std::size(kRegs))]; }

std::string body_instr(Rng &r) {
    std::ostringstream os;
    switch (r.below(10)) {
    case 0: os << "mov " << reg(r) << ", " << reg(r); break;
    case 1: os << "mov " << reg(r) << ", 0x" << std::hex << r.below(0x1000); break;
    case 2: os << "mov " << reg(r) << ", [" << reg(r) << "+0x" << std::hex
               << (r.below(16) * 8) << "]"; break;
    case 3: os << "mov [" << reg(r) << "+0x" << std::hex << (r.below(16) * 8) << "], "
               << reg(r); break;
    case 4: {
        const char *ops[] = {"add", "sub", "xor", "and", "or"};
        os << ops[r.below(5)] << " " << reg(r) << ", " << reg(r);
        break;
    }
    case 5: {
        const char *ops[] = {"add", "sub", "xor"};
        os << ops[r.below(3)] << " " << reg(r) << ", 0x" << std::hex << r.below(256);
        break;
    }
    case 6: os << "push " << reg(r); break;
    case 7: os << "pop " << reg(r); break;
    case 8: os << "lea " << reg(r) << ", [" << reg(r) << "+0x" << std::hex
               << (r.below(64) * 8) << "]"; break;
    default: {
        const char *ops[] = {"add", "sub"};
        os << ops[r.below(2)] << " " << reg(r) << ", [" << reg(r) << "+0x" << std::hex
           << (r.below(8) * 8) << "]";
        break;
    }
    }
    return os.str();
}

} // namespace

Program random_program(uint64_t seed, const RandomProgramOptions &opt) {
    Rng rng(seed);
    ProgramBuilder b(x86_64_arch(), "synth_" + std::to_string(seed));
    b.fixed("VirtualProtect").fixed("mmap");

    for (unsigned f = 0; f < opt.functions; f++) {
        unsigned n_blocks = 1 + unsigned(rng.below(opt.max_blocks));
        uint64_t base = 0x10000 + (uint64_t(f) << 12) + (seed % 7) * 0x100000;
        b.func("fn_" + std::to_string(f), base);

        // plan block layout first so edges can point at real addresses
        std::vector<unsigned> body_count(n_blocks);
        std::vector<uint64_t> addrs(n_blocks);
        uint64_t a = base;
        for (unsigned i = 0; i < n_blocks; i++) {
            body_count[i] = unsigned(rng.below(4));
            addrs[i] = a;
            a += (body_count[i] + 1) * 2;
        }

        auto hex = [](uint64_t v) {
            std::ostringstream os;
            os << "0x" << std::hex << v;
            return os.str();
        };
        for (unsigned i = 0; i < n_blocks; i++) {
            b.block(addrs[i]);
            for (unsigned k = 0; k < body_count[i]; k++) {
                if (opt.fixed_calls && rng.chance(6)) {
                    std::string callee = rng.chance(50) ? "VirtualProtect" : "mmap";
                    b.ins("call " + callee, callee);
                } else if (opt.plain_calls && rng.chance(5)) {
                    std::string callee = "helper" + std::to_string(rng.below(4));
                    b.ins("call " + callee, callee);
                } else {
                    b.ins(body_instr(rng));
                }
            }
            bool last_block = i + 1 == n_blocks;
            uint64_t next = last_block ? 0 : addrs[i + 1];
            unsigned choice = unsigned(rng.below(100));
            if (last_block || choice < 30) {
                b.ins("ret");
            } else if (choice < 45) {
                uint64_t target = addrs[rng.below(n_blocks)];
                b.ins("jmp " + hex(target));
                b.edge(target, EdgeKind::Unconditional);
            } else if (choice < 65) {
                uint64_t target = addrs[rng.below(n_blocks)];
                while (target == next) // distinct arms keep edge kinds unambiguous
                    target = addrs[rng.below(n_blocks)];
                const char *cc[] = {"je", "jne", "js", "jb"};
                b.ins(std::string(cc[rng.below(4)]) + " " + hex(target));
                b.edge(target, EdgeKind::Taken);
                b.edge(next, EdgeKind::Fallthrough);
            } else if (opt.plain_calls && choice < 75) {
                std::string callee = rng.chance(25) && opt.fixed_calls
                                         ? "VirtualProtect"
                                         : "helper" + std::to_string(rng.below(4));
                b.ins("call " + callee, callee);
                b.edge(next, EdgeKind::Fallthrough);
            } else if (choice < 85) {
                b.ins("call " + reg(rng));
                b.edge(next, EdgeKind::Fallthrough);
            } else if (opt.indirect_jumps && choice < 92) {
                b.ins("jmp " + reg(rng));
                if (rng.chance(50))
                    b.edge(addrs[rng.below(n_blocks)], EdgeKind::Unconditional);
            } else {
                b.ins(body_instr(rng));
                b.edge(next, EdgeKind::Fallthrough);
            }
        }
    }
    return b.build();
}

namespace {
std::atomic<uint64_t> g_tmp_counter{0};
}

TempDir::TempDir() {
    auto base = std::filesystem::temp_directory_path() /
                ("gadgex_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(g_tmp_counter.fetch_add(1)));
    std::filesystem::create_directories(base);
    root_ = base.string();
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
}

std::string TempDir::path(const std::string &name) const {
    return (std::filesystem::path(root_) / name).string();
}

} // namespace gadgex::testing
