#include "gadgex/store.hpp"

#include "gadgex/errors.hpp"
#include "gadgex/ir.hpp"
#include "gadgex/simplify.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace gadgex {

namespace {

constexpr char kMagic[4] = {'G', 'D', 'B', '1'};
constexpr uint32_t kVersion = 1;

uint64_t fnv1a(const std::string &data, size_t end) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < end; i++) {
        h ^= uint8_t(data[i]);
        h *= 0x100000001b3ull;
    }
    return h;
}

struct Writer {
    std::string buf;

    void u8(uint8_t v) { buf.push_back(char(v)); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; i++)
            buf.push_back(char((v >> (8 * i)) & 0xff));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; i++)
            buf.push_back(char((v >> (8 * i)) & 0xff));
    }
    void str(const std::string &s) {
        u32(uint32_t(s.size()));
        buf.append(s);
    }
};

struct Reader {
    const std::string &buf;
    size_t pos = 0;

    explicit Reader(const std::string &b) : buf(b) {}

    [[noreturn]] void fail(const std::string &why) const {
        throw IoError("corrupt database: " + why);
    }

    void need(size_t n) const {
        if (pos + n > buf.size())
            fail("unexpected end of file");
    }
    uint8_t u8() {
        need(1);
        return uint8_t(buf[pos++]);
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; i++)
            v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; i++)
            v |= uint64_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

void write_arch(Writer &w, const Arch &a) {
    w.str(a.name);
    w.u32(a.bits);
    w.u8(a.endianness == Endian::Little ? 0 : 1);
    w.u32(uint32_t(a.registers.size()));
    for (const auto &[n, width] : a.registers) {
        w.str(n);
        w.u32(width);
    }
    w.str(a.sp);
    w.str(a.ip);
    w.u32(uint32_t(a.classifiable.size()));
    for (const auto &r : a.classifiable)
        w.str(r);
}

Arch read_arch(Reader &r) {
    Arch a;
    a.name = r.str();
    a.bits = r.u32();
    a.endianness = r.u8() == 0 ? Endian::Little : Endian::Big;
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; i++) {
        std::string name = r.str();
        uint32_t w = r.u32();
        a.registers.emplace_back(name, w);
    }
    a.sp = r.str();
    a.ip = r.str();
    uint32_t c = r.u32();
    for (uint32_t i = 0; i < c; i++)
        a.classifiable.push_back(r.str());
    return a;
}

void write_record(Writer &w, const GadgetRecord &g) {
    w.u64(g.id);
    w.str(g.module);
    w.str(g.arch_name);
    w.str(g.function);
    w.u64(g.function_entry);
    w.u8(uint8_t(g.prefix));
    w.u8(uint8_t(g.suffix));
    w.u8(uint8_t(g.content));
    w.str(g.fixed_symbol);
    w.u32(uint32_t(g.path.size()));
    for (const PathSeg &s : g.path) {
        w.u64(s.block);
        w.u32(s.first);
        w.u32(s.last);
    }
    w.u32(g.instr_count);
    w.u64(g.opcode_hash);
    w.u64(g.start_addr);
    w.u64(g.end_addr);
    w.u8(g.analyzed ? 1 : 0);
    w.u32(uint32_t(g.reg_tags.size()));
    for (const auto &[reg, tag] : g.reg_tags) {
        w.str(reg);
        w.str(tag);
    }
    w.u32(uint32_t(g.mem_tags.size()));
    for (const auto &t : g.mem_tags)
        w.str(t);
    w.u32(uint32_t(g.reg_out.size()));
    for (const auto &[reg, text] : g.reg_out) {
        w.str(reg);
        w.str(text);
    }
    w.u32(uint32_t(g.writes.size()));
    for (const auto &wr : g.writes) {
        w.str(wr.addr);
        w.str(wr.value);
        w.u32(wr.width);
    }
    w.u32(uint32_t(g.constraints.size()));
    for (const auto &c : g.constraints)
        w.str(c);
    w.str(g.suffix_target);
    w.u32(g.n_mem_writes);
    w.u32(g.n_mem_reads);
    w.u32(g.n_nop);
    w.u8(uint8_t(g.sat_status));
    w.u32(uint32_t(g.witness.size()));
    for (const auto &[term, value] : g.witness) {
        w.str(term);
        w.u64(value);
    }
}

GadgetRecord read_record(Reader &r) {
    GadgetRecord g;
    g.id = r.u64();
    g.module = r.str();
    g.arch_name = r.str();
    g.function = r.str();
    g.function_entry = r.u64();
    g.prefix = PrefixKind(r.u8());
    g.suffix = SuffixKind(r.u8());
    g.content = ContentKind(r.u8());
    g.fixed_symbol = r.str();
    uint32_t np = r.u32();
    for (uint32_t i = 0; i < np; i++) {
        PathSeg s;
        s.block = r.u64();
        s.first = r.u32();
        s.last = r.u32();
        g.path.push_back(s);
    }
    g.instr_count = r.u32();
    g.opcode_hash = r.u64();
    g.start_addr = r.u64();
    g.end_addr = r.u64();
    g.analyzed = r.u8() != 0;
    uint32_t nt = r.u32();
    for (uint32_t i = 0; i < nt; i++) {
        std::string reg = r.str();
        g.reg_tags[reg] = r.str();
    }
    uint32_t nm = r.u32();
    for (uint32_t i = 0; i < nm; i++)
        g.mem_tags.push_back(r.str());
    uint32_t no = r.u32();
    for (uint32_t i = 0; i < no; i++) {
        std::string reg = r.str();
        g.reg_out[reg] = r.str();
    }
    uint32_t nw = r.u32();
    for (uint32_t i = 0; i < nw; i++) {
        GadgetRecord::WriteRec wr;
        wr.addr = r.str();
        wr.value = r.str();
        wr.width = r.u32();
        g.writes.push_back(std::move(wr));
    }
    uint32_t nc = r.u32();
    for (uint32_t i = 0; i < nc; i++)
        g.constraints.push_back(r.str());
    g.suffix_target = r.str();
    g.n_mem_writes = r.u32();
    g.n_mem_reads = r.u32();
    g.n_nop = r.u32();
    g.sat_status = SatResult(r.u8());
    uint32_t nwit = r.u32();
    for (uint32_t i = 0; i < nwit; i++) {
        std::string term = r.str();
        uint64_t value = r.u64();
        g.witness.emplace_back(term, value);
    }
    return g;
}

} // namespace

void validate_record(const Arch &arch, const GadgetRecord &r) {
    if (r.path.empty())
        throw ValidationError("record " + std::to_string(r.id) + ": empty path");
    if (r.sat_status != SatResult::Sat && r.sat_status != SatResult::Unsat &&
        r.sat_status != SatResult::Unknown)
        throw ValidationError("record " + std::to_string(r.id) + ": bad sat status");
    try {
        for (const auto &[reg, tag] : r.reg_tags) {
            if (!arch.has_reg(reg))
                throw UnknownRegister("unknown register " + reg);
            parse_tag(arch, tag);
        }
        for (const auto &t : r.mem_tags)
            parse_tag(arch, t);
        for (const auto &[reg, text] : r.reg_out) {
            if (!arch.has_reg(reg))
                throw UnknownRegister("unknown register " + reg);
            parse_expr(arch, text);
        }
        for (const auto &w : r.writes) {
            parse_expr(arch, w.addr);
            parse_expr(arch, w.value);
        }
        for (const auto &c : r.constraints)
            parse_expr(arch, c);
        if (!r.suffix_target.empty())
            parse_expr(arch, r.suffix_target);
        for (const auto &[term, value] : r.witness)
            parse_expr(arch, term);
    } catch (const Error &e) {
        throw ValidationError("record " + std::to_string(r.id) +
                              ": malformed serialized expression: " + e.what());
    }
}

DbLock::DbLock(const std::string &db_path) : lock_path_(db_path + ".lock") {
    FILE *f = std::fopen(lock_path_.c_str(), "wx");
    if (!f)
        throw IoError("database is locked by another process: " + lock_path_);
    std::fclose(f);
}

DbLock::~DbLock() { std::remove(lock_path_.c_str()); }

void GadgetDb::write(const std::string &path, const DbHeader &header,
                     const std::vector<GadgetRecord> &records) {
    header.arch.validate();
    {
        std::set<uint64_t> ids;
        for (const GadgetRecord &r : records) {
            if (!ids.insert(r.id).second)
                throw DuplicateId("duplicate record id " + std::to_string(r.id));
            validate_record(header.arch, r);
        }
    }

    DbLock lock(path);

    Writer w;
    w.buf.append(kMagic, 4);
    w.u32(kVersion);
    write_arch(w, header.arch);
    w.str(header.module);
    w.u64(header.seed);
    w.u64(header.budget);
    w.u32(header.max_len);
    w.u8(header.keep_duplicates ? 1 : 0);
    w.u64(records.size());

    std::vector<std::pair<uint64_t, uint64_t>> index;
    for (const GadgetRecord &r : records) {
        Writer rec;
        write_record(rec, r);
        index.emplace_back(r.id, w.buf.size());
        w.u32(uint32_t(rec.buf.size()));
        w.buf.append(rec.buf);
    }
    uint64_t index_offset = w.buf.size();
    for (const auto &[id, off] : index) {
        w.u64(id);
        w.u64(off);
    }
    w.u64(index_offset);
    uint64_t checksum = fnv1a(w.buf, w.buf.size());
    w.u64(checksum);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write database: " + path);
    out.write(w.buf.data(), std::streamsize(w.buf.size()));
    out.flush();
    if (!out)
        throw IoError("write failed: " + path);
}

GadgetDb GadgetDb::open(const std::string &path) {
    if (std::filesystem::exists(path + ".lock"))
        throw IoError("database is locked by a writer: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open database: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string buf = ss.str();

    if (buf.size() < 4 + 4 + 16)
        throw IoError("corrupt database: file too short");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw IoError("corrupt database: bad magic");

    uint64_t stored_checksum = 0;
    for (int i = 0; i < 8; i++)
        stored_checksum |= uint64_t(uint8_t(buf[buf.size() - 8 + i])) << (8 * i);
    if (fnv1a(buf, buf.size() - 8) != stored_checksum)
        throw IoError("corrupt database: checksum mismatch (truncated or damaged file)");

    Reader r(buf);
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError("unsupported database version " + std::to_string(version));

    GadgetDb db;
    db.header_.arch = read_arch(r);
    db.header_.module = r.str();
    db.header_.seed = r.u64();
    db.header_.budget = r.u64();
    db.header_.max_len = r.u32();
    db.header_.keep_duplicates = r.u8() != 0;
    uint64_t count = r.u64();
    for (uint64_t i = 0; i < count; i++) {
        uint32_t len = r.u32();
        size_t end = r.pos + len;
        GadgetRecord rec = read_record(r);
        if (r.pos != end)
            r.fail("record length mismatch");
        db.by_id_[rec.id] = db.records_.size();
        db.records_.push_back(std::move(rec));
    }
    return db;
}

const GadgetRecord &GadgetDb::get(uint64_t id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end())
        throw IoError("no record with id " + std::to_string(id));
    return records_[it->second];
}

namespace {

// decomposes a simplified address expression into (base register, offset)
bool match_addr_pattern(const ExprRef &addr, const std::string &base,
                        std::optional<uint64_t> offset) {
    if (addr->kind == ExprKind::Init && addr->name == base)
        return !offset || *offset == 0;
    if (addr->kind == ExprKind::Bin && addr->bin == BinKind::Add &&
        addr->a->kind == ExprKind::Init && addr->a->name == base &&
        addr->b->is_const())
        return !offset || mask_width(addr->b->width, *offset) == addr->b->value;
    return false;
}

bool operand_matches(const ExprRef &e, const std::optional<std::string> &src,
                     const std::optional<uint64_t> &constant) {
    if (src && !(e->kind == ExprKind::Init && e->name == *src))
        return false;
    if (constant && !(e->is_const() && e->value == mask_width(e->width, *constant)))
        return false;
    return true;
}

} // namespace

bool tag_requirement_matches(const Arch &arch, const TagRequirement &req,
                             const SemanticTag &tag) {
    (void)arch;
    if (tag.kind != req.kind)
        return false;
    switch (tag.kind) {
    case TagKind::Nop:
    case TagKind::Undefined:
        return true;
    case TagKind::MovReg:
        return !req.src || (tag.a->kind == ExprKind::Init && tag.a->name == *req.src);
    case TagKind::LoadReg:
        return !req.constant ||
               (tag.a->is_const() &&
                tag.a->value == mask_width(tag.a->width, *req.constant));
    case TagKind::LoadMem:
        return !req.base || match_addr_pattern(tag.a, *req.base, req.offset);
    case TagKind::Arithmetic: {
        if (req.op && tag.op != *req.op)
            return false;
        if (req.reg_operands_only &&
            (tag.a->kind != ExprKind::Init || tag.b->kind != ExprKind::Init))
            return false;
        // named operands may appear on either side
        if (req.src || req.constant)
            return (operand_matches(tag.a, req.src, std::nullopt) &&
                    operand_matches(tag.b, std::nullopt, req.constant)) ||
                   (operand_matches(tag.b, req.src, std::nullopt) &&
                    operand_matches(tag.a, std::nullopt, req.constant));
        return true;
    }
    case TagKind::ArithmeticLoad:
        if (req.op && tag.op != *req.op)
            return false;
        if (req.base && !match_addr_pattern(tag.a, *req.base, req.offset))
            return false;
        return !req.src && !req.constant
                   ? true
                   : operand_matches(tag.b, req.src, req.constant);
    case TagKind::StoreMem:
        if (req.base && !match_addr_pattern(tag.a, *req.base, req.offset))
            return false;
        return !req.src || (tag.b->kind == ExprKind::Init && tag.b->name == *req.src);
    case TagKind::ArithmeticStore:
        if (req.op && tag.op != *req.op)
            return false;
        if (req.base && !match_addr_pattern(tag.a, *req.base, req.offset))
            return false;
        return !req.src && !req.constant
                   ? true
                   : operand_matches(tag.b, req.src, req.constant);
    }
    return false;
}

std::vector<uint64_t> GadgetDb::filter(const Filter &f) const {
    std::vector<const GadgetRecord *> hits;
    for (const GadgetRecord &r : records_) {
        if (!f.include_unverified && r.sat_status != SatResult::Sat)
            continue;
        if (f.prefix && r.prefix != *f.prefix)
            continue;
        if (f.suffix && r.suffix != *f.suffix)
            continue;
        if (f.content) {
            if (r.content != *f.content)
                continue;
            if (*f.content == ContentKind::Fixed && f.fixed_symbol &&
                r.fixed_symbol != *f.fixed_symbol)
                continue;
        }
        bool ok = true;
        for (const TagRequirement &req : f.reg_requirements) {
            auto it = r.reg_tags.find(req.reg);
            if (it == r.reg_tags.end() ||
                !tag_requirement_matches(header_.arch, req,
                                         parse_tag(header_.arch, it->second))) {
                ok = false;
                break;
            }
        }
        if (!ok)
            continue;
        for (const TagRequirement &req : f.mem_requirements) {
            bool any = false;
            for (const auto &t : r.mem_tags)
                if (tag_requirement_matches(header_.arch, req,
                                            parse_tag(header_.arch, t))) {
                    any = true;
                    break;
                }
            if (!any) {
                ok = false;
                break;
            }
        }
        if (!ok)
            continue;
        hits.push_back(&r);
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const GadgetRecord *a, const GadgetRecord *b) {
                         ComplexityKey ka = a->key(), kb = b->key();
                         if (!(ka == kb))
                             return key_less(ka, kb);
                         if (a->module != b->module)
                             return a->module < b->module;
                         return a->start_addr < b->start_addr;
                     });
    std::vector<uint64_t> ids;
    for (const GadgetRecord *r : hits)
        ids.push_back(r->id);
    return ids;
}

} // namespace gadgex
