#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gadgex/classify.hpp"
#include "gadgex/satcheck.hpp"
#include "gadgex/simplify.hpp"
#include "gadgex/symexec.hpp"

#include "fixtures.hpp"

#include <algorithm>
#include <random>

using namespace gadgex;
using namespace gadgex::testing;

namespace {

const Arch kArch = x86_64_arch();

ExprRef X(const std::string &t) { return parse_expr(kArch, t); }

SymbolicSummary summary_with(const std::string &reg, const std::string &expr_text) {
    SymbolicSummary s;
    for (const std::string &r : kArch.classifiable)
        s.reg_out[r] = make_init(r, kArch.reg_width(r));
    s.reg_out[reg] = simplify(X(expr_text));
    s.mem_out = make_meminit();
    return s;
}

} // namespace

TEST_CASE("untouched register is a NOP") {
    SymbolicSummary s = summary_with("RBX", "init(RBX)");
    CHECK(classify_register(s, kArch, "RBX").kind == TagKind::Nop);
}

TEST_CASE("match order: first matching definition wins") {
    CHECK(classify_register(summary_with("RBX", "init(RAX)"), kArch, "RBX").kind ==
          TagKind::MovReg);
    CHECK(classify_register(summary_with("RBX", "0x7f:64"), kArch, "RBX").kind ==
          TagKind::LoadReg);
    CHECK(classify_register(summary_with("RBX", "select64(meminit, init(RDI))"),
                            kArch, "RBX")
              .kind == TagKind::LoadMem);
    CHECK(classify_register(summary_with("RBX", "add(init(RAX), init(RCX))"), kArch,
                            "RBX")
              .kind == TagKind::Arithmetic);
    // register-constant arithmetic is admitted
    CHECK(classify_register(summary_with("RBX", "add(init(RAX), 0x10:64)"), kArch,
                            "RBX")
              .kind == TagKind::Arithmetic);
    CHECK(classify_register(
              summary_with("RBX", "add(select64(meminit, init(RBX)), init(RAX))"),
              kArch, "RBX")
              .kind == TagKind::ArithmeticLoad);
    // either argument order
    CHECK(classify_register(
              summary_with("RBX", "xor(init(RAX), select64(meminit, init(RBX)))"),
              kArch, "RBX")
              .kind == TagKind::ArithmeticLoad);
    CHECK(classify_register(summary_with("RBX", "mul(init(RAX), add(init(RBX), "
                                                 "init(RCX)))"),
                            kArch, "RBX")
              .kind == TagKind::Undefined);
    // selects over unresolved store chains stay undefined
    CHECK(classify_register(
              summary_with("RBX", "select64(store64(meminit, init(RSI), init(R9)), "
                                  "init(RDI))"),
              kArch, "RBX")
              .kind == TagKind::Undefined);
}

TEST_CASE("ARM buffer-call fixture registers") {
    Program p = arm_buffer_call_fixture();
    auto gs = extract_gadgets(p, scan_points_of_interest(p), 30);
    const GadgetPath *g = nullptr;
    for (const auto &cand : gs)
        if (cand.suffix == SuffixKind::IC)
            g = &cand;
    REQUIRE(g != nullptr);
    SymbolicSummary sum = execute_symbolic(p, *g);
    SemanticTag r0 = classify_register(sum, p.arch, "R0");
    CHECK(r0.kind == TagKind::LoadMem);
    CHECK(expr_to_text(r0.a) == "add(init(R0), 0x1c:32)");
    SemanticTag r12 = classify_register(sum, p.arch, "R12");
    CHECK(r12.kind == TagKind::LoadMem);
    CHECK(expr_to_text(r12.a) == "add(init(R0), 0xa4:32)");
    CHECK(classify_register(sum, p.arch, "R4").kind == TagKind::Nop);
    CHECK(classify_register(sum, p.arch, "LR").kind == TagKind::LoadReg);
}

TEST_CASE("memory write tags peel the store chain in write order") {
    SymbolicSummary s;
    s.mem_out = make_meminit();
    // store64(RSP-8, RBX)
    ExprRef a1 = simplify(X("add(init(RSP), 0xfffffffffffffff8:64)"));
    ExprRef v1 = X("init(RBX)");
    s.mem_out = make_store(s.mem_out, a1, v1, 64);
    s.writes.push_back({a1, v1, 64});
    SemanticTag t1 = classify_memory_writes(s)[0];
    CHECK(t1.kind == TagKind::StoreMem);
    CHECK(expr_to_text(t1.b) == "init(RBX)");

    // second layer: increment of a loaded word at the same address
    ExprRef a2 = X("init(RDI)");
    ExprRef v2 = simplify(X("add(select32(meminit, init(RDI)), 0x1:32)"));
    s.mem_out = make_store(s.mem_out, a2, v2, 32);
    s.writes.push_back({a2, v2, 32});
    std::vector<SemanticTag> tags = classify_memory_writes(s);
    REQUIRE(tags.size() == 2);
    CHECK(tags[0].kind == TagKind::StoreMem);  // chronological: first write first
    CHECK(tags[1].kind == TagKind::ArithmeticStore);
    CHECK(tags[1].op == BinKind::Add);
    CHECK(expr_to_text(tags[1].a) == "init(RDI)");

    // a store whose value is unrelated to a load stays undefined
    ExprRef v3 = X("add(init(RAX), init(RBX))");
    s.mem_out = make_store(s.mem_out, X("init(RSI)"), v3, 64);
    s.writes.push_back({X("init(RSI)"), v3, 64});
    tags = classify_memory_writes(s);
    REQUIRE(tags.size() == 3);
    CHECK(tags[2].kind == TagKind::Undefined);
}

TEST_CASE("pop rbx; ret carries the complexity key (2, 0, 2, -13)") {
    ProgramBuilder b(kArch, "m");
    b.func("f", 0x100);
    b.block(0x100).ins("call foo", "foo").edge(0x102, EdgeKind::Fallthrough);
    b.block(0x102).ins("pop rbx").ins("ret");
    Program p = b.build();
    auto gs = extract_gadgets(p, scan_points_of_interest(p), 30);
    REQUIRE(gs.size() == 1);
    SymbolicSummary sum = execute_symbolic(p, gs[0]);
    uint32_t nops = 0;
    for (const std::string &r : kArch.classifiable)
        nops += classify_register(sum, kArch, r).kind == TagKind::Nop;
    ComplexityKey key{gs[0].instr_count, uint32_t(sum.writes.size()),
                      sum.n_mem_reads, nops};
    CHECK(key.instr_count == 2);
    CHECK(key.mem_writes == 0);
    CHECK(key.mem_reads == 2);
    CHECK(key.nops == 13); // 15 classifiable, RBX and RIP touched
}

TEST_CASE("complexity ordering is lexicographic with NOPs descending") {
    CHECK(key_less({2, 0, 2, 13}, {5, 0, 0, 15}));
    CHECK(key_less({2, 0, 2, 13}, {2, 1, 0, 15}));
    CHECK(key_less({2, 0, 1, 10}, {2, 0, 2, 15}));
    CHECK(key_less({2, 0, 2, 12}, {2, 0, 2, 10})); // more NOPs first
    CHECK(!key_less({2, 0, 2, 10}, {2, 0, 2, 12}));
}

TEST_CASE("sorting 10k random keys is total, stable, lexicographic") {
    std::mt19937_64 rng(0xC0DE);
    struct Item {
        ComplexityKey key;
        size_t order;
    };
    std::vector<Item> items;
    for (size_t i = 0; i < 10000; i++)
        items.push_back({{uint32_t(rng() % 6), uint32_t(rng() % 3),
                          uint32_t(rng() % 3), uint32_t(rng() % 4)},
                         i});
    std::stable_sort(items.begin(), items.end(),
                     [](const Item &a, const Item &b) { return key_less(a.key, b.key); });
    for (size_t i = 1; i < items.size(); i++) {
        const ComplexityKey &a = items[i - 1].key;
        const ComplexityKey &b = items[i].key;
        CHECK(!key_less(b, a)); // sortedness
        if (a == b)
            CHECK(items[i - 1].order < items[i].order); // stability
        // lexicographic: equal prefixes order by the next component
        if (a.instr_count == b.instr_count && a.mem_writes == b.mem_writes &&
            a.mem_reads == b.mem_reads)
            CHECK(a.nops >= b.nops);
    }
}

TEST_CASE("tag text round-trips") {
    for (const char *text :
         {"NOP", "Undefined", "MovReg(init(RAX))", "LoadReg(0x7f:64)",
          "LoadMem(add(init(RDI), 0x1c:64))",
          "Arithmetic(add, init(RAX), 0x1:64)",
          "ArithmeticLoad(xor, init(RBX), init(RCX))",
          "StoreMem(init(RSP), init(RBX))",
          "ArithmeticStore(add, init(RDI), 0x1:32)"}) {
        SemanticTag t = parse_tag(kArch, text);
        CHECK(tag_to_text(t) == text);
    }
    CHECK_THROWS(parse_tag(kArch, "NOP(init(RAX))"));
    CHECK_THROWS(parse_tag(kArch, "Bogus(1)"));
    CHECK_THROWS(parse_tag(kArch, "MovReg(init(RAX), init(RBX))"));
}

TEST_CASE("every classifiable register of every gadget gets exactly one tag") {
    std::mt19937_64 rng(0x70701);
    for (int trial = 0; trial < 4; trial++) {
        Program p = random_program(rng(), {.functions = 5, .max_blocks = 8});
        for (const GadgetPath &g :
             dedup(extract_gadgets(p, scan_points_of_interest(p), 30), false)) {
            SymbolicSummary sum = execute_symbolic(p, g);
            for (const std::string &r : p.arch.classifiable) {
                SemanticTag t = classify_register(sum, p.arch, r);
                CHECK(int(t.kind) >= int(TagKind::Nop));
                CHECK(int(t.kind) <= int(TagKind::Undefined));
            }
            CHECK(classify_memory_writes(sum).size() == sum.writes.size());
        }
    }
}

TEST_CASE("tag soundness: random gadgets, constraint-satisfying replays") {
    std::mt19937_64 rng(0x7A6);
    int tags_checked = 0;
    for (int trial = 0; trial < 12; trial++) {
        Program p = random_program(rng(), {.functions = 6, .max_blocks = 7});
        for (const GadgetPath &g :
             dedup(extract_gadgets(p, scan_points_of_interest(p), 30), false)) {
            SymbolicSummary sum = execute_symbolic(p, g);
            SatStatus st =
                check_satisfiable(p.arch, sum.constraints, {}, 2048, rng());
            if (st.result != SatResult::Sat)
                continue;
            auto [init, syms] = state_from_witness(p.arch, st.witness);

            // concrete replay along the gadget
            std::vector<Stmt> ir;
            unsigned n_fixed = 0;
            const Function *fn = find_function(p, g.function_entry);
            for (const PathSeg &seg : g.path) {
                const BasicBlock &bb = fn->blocks.at(seg.block);
                for (uint32_t i = seg.first; i <= seg.last; i++) {
                    const Instruction &in = bb.instrs[i];
                    if (p.is_fixed_call(in)) {
                        std::string tag = "fcall" + std::to_string(n_fixed++);
                        for (const std::string &r : havoc_registers(p.arch)) {
                            Stmt s;
                            s.kind = Stmt::Kind::Assign;
                            s.reg = r;
                            auto it = syms.find(tag + "_" + r);
                            s.value = make_const(p.arch.reg_width(r),
                                                 it == syms.end() ? 0 : it->second);
                            ir.push_back(std::move(s));
                        }
                        continue;
                    }
                    for (const Stmt &s : in.ir)
                        ir.push_back(s);
                }
            }
            std::vector<StoreEvent> trace;
            MachineState fin = exec_path(init, ir, &syms, &trace);

            for (const std::string &r : p.arch.classifiable) {
                SemanticTag t = classify_register(sum, p.arch, r);
                uint64_t got = fin.get_reg(r);
                switch (t.kind) {
                case TagKind::Nop:
                    CHECK(got == init.get_reg(r));
                    break;
                case TagKind::MovReg:
                    CHECK(got == init.get_reg(t.a->name));
                    break;
                case TagKind::LoadReg:
                    CHECK(got == t.a->value);
                    break;
                case TagKind::LoadMem:
                    CHECK(got == init.load(eval_expr(init, t.a, &syms),
                                           p.arch.reg_width(r)));
                    break;
                case TagKind::Arithmetic:
                case TagKind::ArithmeticLoad:
                    CHECK(got == eval_expr(init, sum.reg_out.at(r), &syms));
                    break;
                default:
                    break;
                }
                tags_checked++;
            }
            auto wtags = classify_memory_writes(sum);
            REQUIRE(trace.size() == wtags.size());
            for (size_t w = 0; w < wtags.size(); w++) {
                if (wtags[w].kind == TagKind::StoreMem) {
                    CHECK(trace[w].addr == eval_expr(init, wtags[w].a, &syms));
                    CHECK(trace[w].value ==
                          mask_width(trace[w].width,
                                     init.get_reg(wtags[w].b->name)));
                }
                tags_checked++;
            }
        }
    }
    CHECK(tags_checked > 1000);
}
