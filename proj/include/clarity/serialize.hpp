#pragma once

#include <string>
#include <utility>
#include <vector>

#include "clarity/params.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

// Model container ("CLRM"): versioned header of ordered key/value strings
// followed by named rank/shape-tagged float32 tensors, everything
// little-endian. Layout:
//   bytes 0..3   magic "CLRM"
//   u32          format version (1)
//   u32          header entry count, then per entry u16 key length, key
//                bytes, u16 value length, value bytes
//   u32          tensor count, then per tensor u16 name length, name bytes,
//                u8 rank, u32 dims[rank], f32 data[product(dims)]
// No timestamps or other environment-dependent bytes: identical inputs
// produce identical files.
struct Blob {
    std::vector<std::pair<std::string, std::string>> header;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void set(const std::string& key, const std::string& value);
    const std::string* find(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws if missing
    void add_tensor(const std::string& name, Tensor t);
    const Tensor& tensor(const std::string& name) const;  // throws if missing
};

void write_blob(const std::string& path, const Blob& blob);
Blob read_blob(const std::string& path);

// params <-> tensors, preserving entry order; `prefix` is prepended on store
// and stripped on load
void params_to_blob(const ParamStore& ps, const std::string& prefix, Blob& blob);
void params_from_blob(const Blob& blob, const std::string& prefix, ParamStore& ps);

}  // namespace clarity
