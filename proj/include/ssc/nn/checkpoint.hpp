#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "ssc/nn/params.hpp"

namespace ssc::nn {

/// Binary container shared by every model kind:
///
///   "ECNN1"
///   u32 entry count
///   per entry: u32 name length, name bytes, u32 rank, rank x u32 extents
///   per entry, in table order: product(extents) x f32 payload
///   u32 metadata length, metadata bytes (key=value lines)
///
/// All integers and floats are little-endian.
struct Container {
    struct Entry {
        std::string name;
        Shape shape;
        std::vector<float> data;
    };
    std::vector<Entry> entries;
    std::map<std::string, std::string> meta;

    const Entry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
    const Entry& at(const std::string& name) const {
        if (auto* e = find(name)) return *e;
        throw Error("checkpoint: missing tensor " + name);
    }
    const std::string& meta_at(const std::string& key) const {
        auto it = meta.find(key);
        if (it == meta.end()) throw Error("checkpoint: missing metadata key " + key);
        return it->second;
    }
};

inline constexpr char kCheckpointMagic[] = {'E', 'C', 'N', 'N', '1'};
inline constexpr std::uint32_t kMaxRank = 8;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    explicit Reader(const std::string& bytes) : b_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > b_.size() || pos_ + n < pos_)
            throw Error(std::string("checkpoint: truncated file while reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32("payload")); }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    const std::string& b_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize(const Container& c) {
    std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::put_u32(out, static_cast<std::uint32_t>(c.entries.size()));
    for (const auto& e : c.entries) {
        if (e.data.size() != shape_size(e.shape)) throw Error("checkpoint: entry " + e.name + " size mismatch");
        detail::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out += e.name;
        detail::put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) detail::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (const auto& e : c.entries)
        for (float f : e.data) detail::put_f32(out, f);
    std::string meta;
    for (const auto& [k, v] : c.meta) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw Error("checkpoint: metadata key/value may not contain '=' (key) or newlines: " + k);
        meta += k + "=" + v + "\n";
    }
    detail::put_u32(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    return out;
}

inline Container deserialize(const std::string& bytes) {
    if (bytes.size() < sizeof kCheckpointMagic ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw Error("checkpoint: bad magic bytes (expected ECNN1)");
    detail::Reader r(bytes);
    r.bytes(sizeof kCheckpointMagic, "magic");
    Container c;
    const std::uint32_t count = r.u32("entry count");
    // Each table entry needs at least 8 bytes; reject absurd counts early.
    if (static_cast<std::size_t>(count) * 8 > r.remaining()) throw Error("checkpoint: corrupt shape table (entry count)");
    std::size_t total = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        Container::Entry e;
        const std::uint32_t len = r.u32("name length");
        if (len == 0 || len > 4096) throw Error("checkpoint: corrupt shape table (name length)");
        e.name = r.bytes(len, "name");
        const std::uint32_t rank = r.u32("rank");
        if (rank > kMaxRank) throw Error("checkpoint: corrupt shape table (rank " + std::to_string(rank) + ")");
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t ext = r.u32("extent");
            e.shape.push_back(ext);
            n *= ext;
            if (n > (std::size_t{1} << 34)) throw Error("checkpoint: corrupt shape table (extent overflow)");
        }
        total += n;
        if (total * 4 > bytes.size()) throw Error("checkpoint: corrupt shape table or truncated payload");
        c.entries.push_back(std::move(e));
    }
    for (auto& e : c.entries) {
        const std::size_t n = shape_size(e.shape);
        r.need(n * 4, "payload");
        e.data.resize(n);
        for (auto& f : e.data) f = r.f32();
    }
    const std::uint32_t mlen = r.u32("metadata length");
    const std::string meta = r.bytes(mlen, "metadata");
    if (r.remaining() != 0) throw Error("checkpoint: trailing bytes after metadata");
    std::size_t start = 0;
    while (start < meta.size()) {
        auto nl = meta.find('\n', start);
        if (nl == std::string::npos) nl = meta.size();
        std::string line = meta.substr(start, nl - start);
        start = nl + 1;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("checkpoint: malformed metadata line '" + line + "'");
        c.meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return c;
}

inline void save_container(const Container& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    const std::string bytes = serialize(c);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path);
}

inline Container load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

template <class T>
void put_params(Container& c, const ParamSet<T>& ps) {
    for (const auto& p : ps)
        c.entries.push_back({p.name, p.value.shape(), std::vector<float>(p.value.values().begin(), p.value.values().end())});
}

template <class T>
ParamSet<T> get_params(const Container& c) {
    ParamSet<T> ps;
    ps.reserve(c.entries.size());
    for (const auto& e : c.entries)
        ps.add(e.name, Tensor<T>(e.shape, std::vector<T>(e.data.begin(), e.data.end())));
    return ps;
}

/// Round-trippable text for a double.
inline std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace ssc::nn
