#pragma once

// Bitmap file format:
//   magic "PSV1"
//   u32 LE  descriptor length, then the canonical rule spec bytes
//   u64 LE  bound X
//   raw bitset words, LE, ceil((X/2 + 1) / 64) of them
//   u64 LE  FNV-1a checksum of the bitset bytes
// The flag for the prime 2 is not stored; it is recomputed from the rule.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "psv/sieve.hpp"

namespace psv {
namespace detail {

constexpr char kBitmapMagic[4] = {'P', 'S', 'V', '1'};

inline u64 fnv1a64(const unsigned char* data, std::size_t size) {
    u64 hash = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= data[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline void put_u32(std::string& out, u32 v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, u64 v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
    const unsigned char* p;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) throw io_error("bitmap file truncated");
    }
    u32 get_u32() {
        need(4);
        u32 v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<u32>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    u64 get_u64() {
        need(8);
        u64 v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<u64>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
};

inline std::string bitset_bytes(const MembershipBitmap& bitmap) {
    std::string bytes;
    bytes.reserve(bitmap.words().size() * 8);
    for (u64 w : bitmap.words()) put_u64(bytes, w);
    return bytes;
}

}  // namespace detail

inline void save_bitmap(const MembershipBitmap& bitmap,
                        const std::filesystem::path& path) {
    std::string out;
    out.append(detail::kBitmapMagic, 4);
    std::string spec = bitmap.rule().spec();
    detail::put_u32(out, static_cast<u32>(spec.size()));
    out += spec;
    detail::put_u64(out, bitmap.bound());
    std::string bits = detail::bitset_bytes(bitmap);
    out += bits;
    detail::put_u64(out, detail::fnv1a64(
        reinterpret_cast<const unsigned char*>(bits.data()), bits.size()));

    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw io_error("save_bitmap: cannot open " + path.string());
    std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
    std::fclose(f);
    if (written != out.size())
        throw io_error("save_bitmap: short write to " + path.string());
}

inline MembershipBitmap load_bitmap(
    const std::filesystem::path& path,
    const std::optional<ClosedSetRule>& expected_rule = std::nullopt) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) throw io_error("load_bitmap: cannot open " + path.string());
    std::string data;
    char buf[1 << 16];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) data.append(buf, got);
    std::fclose(f);

    detail::ByteReader r{reinterpret_cast<const unsigned char*>(data.data()),
                         data.size()};
    r.need(4);
    if (std::memcmp(data.data(), detail::kBitmapMagic, 4) != 0)
        throw io_error("load_bitmap: bad magic");
    r.pos = 4;
    u32 spec_len = r.get_u32();
    r.need(spec_len);
    std::string spec(data.data() + r.pos, spec_len);
    r.pos += spec_len;
    ClosedSetRule rule = parse_rule(spec);
    if (expected_rule && !(rule == *expected_rule))
        throw rule_mismatch_error("load_bitmap: file holds rule '" + spec +
                                  "', expected '" + expected_rule->spec() + "'");
    u64 bound = r.get_u64();

    MembershipBitmap bitmap(rule, bound);
    std::size_t n_words = bitmap.words().size();
    r.need(n_words * 8);
    u64 checksum = detail::fnv1a64(
        reinterpret_cast<const unsigned char*>(data.data() + r.pos), n_words * 8);
    for (std::size_t i = 0; i < n_words; ++i) bitmap.words()[i] = r.get_u64();
    u64 stored = r.get_u64();
    if (stored != checksum)
        throw checksum_error("load_bitmap: checksum mismatch in " + path.string());
    bitmap.set_two(bound >= 2 && detail::rule_admits_two(rule));
    return bitmap;
}

}  // namespace psv
