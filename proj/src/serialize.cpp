#include "clarity/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace clarity {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::ostream& o, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    o.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& o, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    o.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t get_u16(std::istream& i, const std::string& path) {
    unsigned char b[2];
    if (!i.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error(path + ": truncated");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& i, const std::string& path) {
    unsigned char b[4];
    if (!i.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error(path + ": truncated");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

void put_str(std::ostream& o, const std::string& s) {
    if (s.size() > 0xFFFF) throw std::runtime_error("model file: string too long");
    put_u16(o, static_cast<std::uint16_t>(s.size()));
    o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& i, const std::string& path) {
    const std::uint16_t n = get_u16(i, path);
    std::string s(n, '\0');
    if (!i.read(s.data(), n)) throw std::runtime_error(path + ": truncated");
    return s;
}

void put_f32(std::ostream& o, const float* p, std::size_t n) {
    static_assert(sizeof(float) == 4);
    for (std::size_t k = 0; k < n; ++k) {
        std::uint32_t bits;
        std::memcpy(&bits, p + k, 4);
        put_u32(o, bits);
    }
}

void get_f32(std::istream& i, float* p, std::size_t n, const std::string& path) {
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t bits = get_u32(i, path);
        std::memcpy(p + k, &bits, 4);
    }
}

}  // namespace

void Blob::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : header)
        if (k == key) {
            v = value;
            return;
        }
    header.emplace_back(key, value);
}

const std::string* Blob::find(const std::string& key) const {
    for (const auto& [k, v] : header)
        if (k == key) return &v;
    return nullptr;
}

std::string Blob::get(const std::string& key) const {
    if (const std::string* v = find(key)) return *v;
    throw std::runtime_error("model file: missing header key '" + key + "'");
}

void Blob::add_tensor(const std::string& name, Tensor t) {
    tensors.emplace_back(name, std::move(t));
}

const Tensor& Blob::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw std::runtime_error("model file: missing tensor '" + name + "'");
}

void write_blob(const std::string& path, const Blob& blob) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(kMagic, 4);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(blob.header.size()));
    for (const auto& [k, v] : blob.header) {
        put_str(f, k);
        put_str(f, v);
    }
    put_u32(f, static_cast<std::uint32_t>(blob.tensors.size()));
    for (const auto& [name, t] : blob.tensors) {
        put_str(f, name);
        if (t.rank() > 255) throw std::runtime_error("model file: rank too large");
        f.put(static_cast<char>(t.rank()));
        for (int d : t.shape) put_u32(f, static_cast<std::uint32_t>(d));
        put_f32(f, t.ptr(), t.data.size());
    }
    if (!f) throw std::runtime_error(path + ": write failed");
}

Blob read_blob(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open");
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + ": not a model file (bad magic)");
    const std::uint32_t ver = get_u32(f, path);
    if (ver != kVersion)
        throw std::runtime_error(path + ": unsupported format version " + std::to_string(ver));
    Blob b;
    const std::uint32_t hn = get_u32(f, path);
    for (std::uint32_t i = 0; i < hn; ++i) {
        std::string k = get_str(f, path);
        std::string v = get_str(f, path);
        b.header.emplace_back(std::move(k), std::move(v));
    }
    const std::uint32_t tn = get_u32(f, path);
    for (std::uint32_t i = 0; i < tn; ++i) {
        std::string name = get_str(f, path);
        const int rank = f.get();
        if (rank < 0) throw std::runtime_error(path + ": truncated");
        std::vector<int> shape(static_cast<std::size_t>(rank));
        for (int d = 0; d < rank; ++d) shape[static_cast<std::size_t>(d)] = static_cast<int>(get_u32(f, path));
        Tensor t(shape);
        get_f32(f, t.ptr(), t.data.size(), path);
        b.tensors.emplace_back(std::move(name), std::move(t));
    }
    return b;
}

void params_to_blob(const ParamStore& ps, const std::string& prefix, Blob& blob) {
    for (const auto& e : ps.entries()) blob.add_tensor(prefix + e.name, e.value);
}

void params_from_blob(const Blob& blob, const std::string& prefix, ParamStore& ps) {
    for (auto& e : ps.entries()) {
        const Tensor& t = blob.tensor(prefix + e.name);
        if (t.shape != e.value.shape)
            throw std::runtime_error("model file: tensor '" + prefix + e.name + "' has shape " +
                                     t.shape_str() + ", expected " + e.value.shape_str());
        e.value = t;
    }
}

}  // namespace clarity
