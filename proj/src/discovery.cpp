#include "gadgex/discovery.hpp"

#include "gadgex/errors.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace gadgex {

const char *prefix_name(PrefixKind p) { return p == PrefixKind::EP ? "EP" : "CS"; }

const char *suffix_name(SuffixKind s) {
    switch (s) {
    case SuffixKind::IC: return "IC";
    case SuffixKind::IJ: return "IJ";
    case SuffixKind::RET: return "RET";
    }
    return "?";
}

const char *content_name(ContentKind c) {
    switch (c) {
    case ContentKind::Arb: return "ARB";
    case ContentKind::Fixed: return "F";
    case ContentKind::Loop: return "LOOP";
    }
    return "?";
}

PrefixKind prefix_from_name(const std::string &s) {
    if (s == "EP") return PrefixKind::EP;
    if (s == "CS") return PrefixKind::CS;
    throw ValidationError("unknown prefix: " + s);
}

SuffixKind suffix_from_name(const std::string &s) {
    if (s == "IC") return SuffixKind::IC;
    if (s == "IJ") return SuffixKind::IJ;
    if (s == "RET") return SuffixKind::RET;
    throw ValidationError("unknown suffix: " + s);
}

uint64_t PoiEntry::addr(const Program &) const {
    return fn->blocks.at(block).instrs[index].addr;
}

PoiIndex scan_points_of_interest(const Program &p) {
    PoiIndex idx;
    // phase 1: calls to fixed functions
    for (const Function &fn : p.functions)
        for (const auto &[baddr, bb] : fn.blocks)
            for (uint32_t i = 0; i < bb.instrs.size(); i++)
                if (p.is_fixed_call(bb.instrs[i]))
                    idx.fixed_calls.push_back(
                        {&fn, baddr, i, *bb.instrs[i].call_target});
    // phase 2: every instruction of every function
    for (const Function &fn : p.functions) {
        for (const auto &[baddr, bb] : fn.blocks) {
            for (uint32_t i = 0; i < bb.instrs.size(); i++) {
                const Instruction &in = bb.instrs[i];
                switch (in.cls) {
                case InstrClass::RET:
                    idx.rets.push_back({&fn, baddr, i, ""});
                    break;
                case InstrClass::ICALL:
                    idx.icalls.push_back({&fn, baddr, i, ""});
                    break;
                case InstrClass::IJUMP:
                    idx.ijumps.push_back({&fn, baddr, i, ""});
                    break;
                case InstrClass::CALL:
                    idx.calls.push_back({&fn, baddr, i, ""});
                    break;
                default:
                    break;
                }
            }
        }
    }
    auto by_addr = [&p](const PoiEntry &a, const PoiEntry &b) {
        return a.addr(p) < b.addr(p);
    };
    std::sort(idx.rets.begin(), idx.rets.end(), by_addr);
    std::sort(idx.icalls.begin(), idx.icalls.end(), by_addr);
    std::sort(idx.ijumps.begin(), idx.ijumps.end(), by_addr);
    std::sort(idx.calls.begin(), idx.calls.end(), by_addr);
    std::sort(idx.fixed_calls.begin(), idx.fixed_calls.end(), by_addr);
    return idx;
}

uint64_t opcode_hash_of(const Program &p, const Function &fn,
                        const std::vector<PathSeg> &path) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::string &s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        h ^= '\n';
        h *= 0x100000001b3ull;
    };
    for (const PathSeg &seg : path) {
        const BasicBlock &bb = fn.blocks.at(seg.block);
        for (uint32_t i = seg.first; i <= seg.last; i++)
            mix(bb.instrs[i].text);
    }
    (void)p;
    return h;
}

std::vector<const Instruction *> path_instructions(const Function &fn,
                                                   const std::vector<PathSeg> &path) {
    std::vector<const Instruction *> out;
    for (const PathSeg &seg : path) {
        const BasicBlock &bb = fn.blocks.at(seg.block);
        for (uint32_t i = seg.first; i <= seg.last; i++)
            out.push_back(&bb.instrs[i]);
    }
    return out;
}

const Function *find_function(const Program &p, uint64_t entry) {
    for (const Function &fn : p.functions)
        if (fn.entry == entry)
            return &fn;
    return nullptr;
}

namespace {

struct Walker {
    const Program &p;
    const Function &fn;
    uint32_t max_len;
    SuffixKind suffix;
    uint64_t endpoint_block;
    uint64_t endpoint_addr;
    bool endpoint_is_terminator = false;
    std::map<uint64_t, std::vector<uint64_t>> preds;
    std::vector<GadgetPath> out;

    // current backward path, head first (program order); `visited` mirrors it
    std::vector<PathSeg> path;
    std::set<uint64_t> visited;

    Walker(const Program &p_, const Function &fn_, uint32_t max_len_, SuffixKind sfx,
           uint64_t eb, uint64_t ea)
        : p(p_), fn(fn_), max_len(max_len_), suffix(sfx), endpoint_block(eb),
          endpoint_addr(ea), preds(predecessors(fn_)) {}

    const BasicBlock &block(uint64_t addr) const { return fn.blocks.at(addr); }

    void emit(PrefixKind prefix, ContentKind content, const std::string &symbol,
              uint32_t head_first, uint32_t count) {
        if (count == 0 || count > max_len)
            return;
        GadgetPath g;
        g.prefix = prefix;
        g.suffix = suffix;
        g.content = content;
        g.fixed_symbol = content == ContentKind::Fixed ? symbol : "";
        g.path = path;
        g.path.front().first = head_first;
        g.instr_count = count;
        g.module = p.module_name;
        g.function = fn.name;
        g.function_entry = fn.entry;
        g.start_addr = block(g.path.front().block).instrs[head_first].addr;
        g.end_addr = endpoint_addr;
        g.opcode_hash = opcode_hash_of(p, fn, g.path);
        out.push_back(std::move(g));
    }

    // Scans the head block of the current path backwards from cover_end and
    // recurses into predecessors. rest_count counts covered instructions
    // strictly after cover_end. nearest holds the fixed-call symbol nearest
    // to the endpoint on this path, if any.
    void scan(uint64_t baddr, int cover_end, uint32_t rest_count,
              std::string nearest) {
        const BasicBlock &bb = block(baddr);
        uint32_t running = rest_count;
        for (int i = cover_end; i >= 0; i--) {
            if (running > max_len)
                return; // everything deeper only grows
            const Instruction &in = bb.instrs[size_t(i)];
            if (in.cls == InstrClass::CALL || in.cls == InstrClass::ICALL) {
                // gadget starts right after the call
                emit(PrefixKind::CS,
                     nearest.empty() ? ContentKind::Arb : ContentKind::Fixed, nearest,
                     uint32_t(i + 1), running);
                if (!p.is_fixed_call(in))
                    return; // plain call: traversal stops
                if (nearest.empty())
                    nearest = *in.call_target;
                running++;
                continue;
            }
            running++;
        }
        if (running > max_len)
            return;
        // reached the block start
        if (baddr == fn.entry)
            emit(PrefixKind::EP,
                 nearest.empty() ? ContentKind::Arb : ContentKind::Fixed, nearest, 0,
                 running);
        auto pit = preds.find(baddr);
        if (pit == preds.end())
            return;
        for (uint64_t pred : pit->second) {
            const BasicBlock &pb = block(pred);
            if (visited.count(pred)) {
                // closed walk: loop gadget if it starts at the CS of its own
                // ending indirect call
                if (pred == endpoint_block && suffix == SuffixKind::IC &&
                    endpoint_is_terminator)
                    emit(PrefixKind::CS, ContentKind::Loop, "", 0, running);
                continue;
            }
            const Instruction &term = pb.terminator();
            if (term.cls == InstrClass::CALL || term.cls == InstrClass::ICALL) {
                // entering across a call boundary: the current head starts at
                // that call's return site
                emit(PrefixKind::CS,
                     nearest.empty() ? ContentKind::Arb : ContentKind::Fixed, nearest,
                     0, running);
                if (!p.is_fixed_call(term))
                    continue;
                if (running + 1 > max_len)
                    continue;
                std::string next_nearest = nearest.empty() ? *term.call_target : nearest;
                path.insert(path.begin(),
                            {pred, 0, uint32_t(pb.instrs.size() - 1)});
                visited.insert(pred);
                scan(pred, int(pb.instrs.size()) - 2, running + 1, next_nearest);
                visited.erase(pred);
                path.erase(path.begin());
                continue;
            }
            if (running + 1 > max_len)
                continue;
            path.insert(path.begin(), {pred, 0, uint32_t(pb.instrs.size() - 1)});
            visited.insert(pred);
            scan(pred, int(pb.instrs.size()) - 1, running, nearest);
            visited.erase(pred);
            path.erase(path.begin());
        }
    }

    void run(uint32_t endpoint_index) {
        endpoint_is_terminator =
            endpoint_index + 1 == block(endpoint_block).instrs.size();
        path.push_back({endpoint_block, 0, endpoint_index});
        visited.insert(endpoint_block);
        scan(endpoint_block, int(endpoint_index) - 1, 1, "");
    }
};

SuffixKind suffix_of(InstrClass c) {
    switch (c) {
    case InstrClass::ICALL: return SuffixKind::IC;
    case InstrClass::IJUMP: return SuffixKind::IJ;
    case InstrClass::RET: return SuffixKind::RET;
    default:
        throw ValidationError("not an endpoint class");
    }
}

bool gadget_order(const GadgetPath &a, const GadgetPath &b) {
    if (a.start_addr != b.start_addr)
        return a.start_addr < b.start_addr;
    if (a.end_addr != b.end_addr)
        return a.end_addr < b.end_addr;
    if (a.instr_count != b.instr_count)
        return a.instr_count < b.instr_count;
    if (a.prefix != b.prefix)
        return a.prefix < b.prefix;
    if (a.content != b.content)
        return a.content < b.content;
    if (a.fixed_symbol != b.fixed_symbol)
        return a.fixed_symbol < b.fixed_symbol;
    if (a.path.size() != b.path.size())
        return a.path.size() < b.path.size();
    for (size_t i = 0; i < a.path.size(); i++) {
        if (a.path[i].block != b.path[i].block)
            return a.path[i].block < b.path[i].block;
        if (a.path[i].first != b.path[i].first)
            return a.path[i].first < b.path[i].first;
        if (a.path[i].last != b.path[i].last)
            return a.path[i].last < b.path[i].last;
    }
    return false;
}

} // namespace

std::vector<GadgetPath> extract_gadgets(const Program &p, const PoiIndex &poi,
                                        uint32_t max_len, unsigned workers) {
    if (max_len < 1)
        throw ValidationError("max_len must be at least 1");

    std::vector<const PoiEntry *> endpoints;
    for (const PoiEntry &e : poi.icalls)
        endpoints.push_back(&e);
    for (const PoiEntry &e : poi.ijumps)
        endpoints.push_back(&e);
    for (const PoiEntry &e : poi.rets)
        endpoints.push_back(&e);

    std::vector<std::vector<GadgetPath>> results(endpoints.size());
    auto work = [&](const PoiEntry &e, std::vector<GadgetPath> &dst) {
        const BasicBlock &bb = e.fn->blocks.at(e.block);
        Walker w(p, *e.fn, max_len, suffix_of(bb.instrs[e.index].cls), e.block,
                 bb.instrs[e.index].addr);
        w.run(e.index);
        dst = std::move(w.out);
    };

    if (workers <= 1 || endpoints.size() < 2) {
        for (size_t i = 0; i < endpoints.size(); i++)
            work(*endpoints[i], results[i]);
    } else {
        std::atomic<size_t> cursor{0};
        auto runner = [&] {
            for (;;) {
                size_t i = cursor.fetch_add(1);
                if (i >= endpoints.size())
                    return;
                work(*endpoints[i], results[i]);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; t++)
            pool.emplace_back(runner);
        for (auto &t : pool)
            t.join();
    }

    std::vector<GadgetPath> all;
    for (auto &r : results)
        for (auto &g : r)
            all.push_back(std::move(g));
    std::sort(all.begin(), all.end(), gadget_order);
    return all;
}

std::vector<GadgetPath> dedup(std::vector<GadgetPath> gadgets, bool keep_duplicates) {
    if (keep_duplicates)
        return gadgets;
    std::set<uint64_t> seen;
    std::vector<GadgetPath> out;
    for (auto &g : gadgets)
        if (seen.insert(g.opcode_hash).second)
            out.push_back(std::move(g));
    return out;
}

} // namespace gadgex
