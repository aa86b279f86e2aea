#include "clarity/data.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace clarity {

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(path + ": truncated at offset " + std::to_string(in.tellg()));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open");
    return f;
}

}  // namespace

void ImageDataset::validate() const {
    if (images.rank() != 3 || images.dim(1) != 28 || images.dim(2) != 28)
        throw std::runtime_error("dataset: images must be [N,28,28], got " + images.shape_str());
    if (static_cast<int>(labels.size()) != images.dim(0))
        throw std::runtime_error("dataset: " + std::to_string(labels.size()) + " labels for " +
                                 std::to_string(images.dim(0)) + " images");
    for (float v : images.data)
        if (!(v >= 0.0f && v <= 1.0f)) throw std::runtime_error("dataset: pixel outside [0,1]");
    for (int l : labels)
        if (l < 0 || l > 9) throw std::runtime_error("dataset: label outside 0..9");
}

Tensor load_idx_images(const std::string& path) {
    auto f = open_in(path);
    const std::uint32_t magic = read_u32_be(f, path);
    if (magic != 2051)
        throw std::runtime_error(path + ": bad magic " + std::to_string(magic) + " (want 2051) at offset 0");
    const int n = static_cast<int>(read_u32_be(f, path));
    const int h = static_cast<int>(read_u32_be(f, path));
    const int w = static_cast<int>(read_u32_be(f, path));
    Tensor t({n, h, w});
    std::vector<unsigned char> raw(static_cast<std::size_t>(t.numel()));
    if (!f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw std::runtime_error(path + ": truncated pixel payload at offset " + std::to_string(f.tellg()));
    for (std::size_t i = 0; i < raw.size(); ++i) t.data[i] = static_cast<float>(raw[i]) / 255.0f;
    return t;
}

std::vector<int> load_idx_labels(const std::string& path) {
    auto f = open_in(path);
    const std::uint32_t magic = read_u32_be(f, path);
    if (magic != 2049)
        throw std::runtime_error(path + ": bad magic " + std::to_string(magic) + " (want 2049) at offset 0");
    const int n = static_cast<int>(read_u32_be(f, path));
    std::vector<unsigned char> raw(static_cast<std::size_t>(n));
    if (!f.read(reinterpret_cast<char*>(raw.data()), n))
        throw std::runtime_error(path + ": truncated label payload at offset " + std::to_string(f.tellg()));
    return {raw.begin(), raw.end()};
}

ImageDataset load_idx(const std::string& image_path, const std::string& label_path,
                      const std::string& split) {
    ImageDataset ds;
    ds.images = load_idx_images(image_path);
    ds.labels = load_idx_labels(label_path);
    ds.split = split;
    if (ds.images.dim(0) != static_cast<int>(ds.labels.size()))
        throw std::runtime_error(image_path + ": " + std::to_string(ds.images.dim(0)) + " images but " +
                                 label_path + " has " + std::to_string(ds.labels.size()) + " labels");
    ds.validate();
    return ds;
}

void write_idx_images(const std::string& path, const Tensor& images) {
    if (images.rank() != 3) throw std::runtime_error(path + ": images must be rank 3");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    write_u32_be(f, 2051);
    write_u32_be(f, static_cast<std::uint32_t>(images.dim(0)));
    write_u32_be(f, static_cast<std::uint32_t>(images.dim(1)));
    write_u32_be(f, static_cast<std::uint32_t>(images.dim(2)));
    for (float v : images.data) {
        const auto q = static_cast<unsigned char>(std::lround(255.0 * static_cast<double>(v)));
        f.put(static_cast<char>(q));
    }
    if (!f) throw std::runtime_error(path + ": write failed");
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    write_u32_be(f, 2049);
    write_u32_be(f, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) f.put(static_cast<char>(static_cast<unsigned char>(l)));
    if (!f) throw std::runtime_error(path + ": write failed");
}

MnistData load_mnist(const std::string& dir) {
    MnistData d;
    d.train = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte", "train");
    d.test = load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte", "test");
    return d;
}

std::vector<std::vector<int>> batches(int n, int batch_size, Rng& rng) {
    if (batch_size < 1) throw std::runtime_error("batches: batch size must be >= 1");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; i += batch_size) {
        const int e = std::min(n, i + batch_size);
        out.emplace_back(order.begin() + i, order.begin() + e);
    }
    return out;
}

std::vector<int> indices_of_class(const std::vector<int>& labels, int cls) {
    std::vector<int> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cls) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> pair_sampler(const ImageDataset& ds, int y, int y_prime, int count, Rng& rng) {
    if (y == y_prime)
        throw std::runtime_error("pair sampler: source and target class are both " + std::to_string(y));
    std::vector<int> pool = indices_of_class(ds.labels, y);
    if (static_cast<int>(pool.size()) < count)
        throw std::runtime_error("pair sampler: only " + std::to_string(pool.size()) + " images of class " +
                                 std::to_string(y) + ", need " + std::to_string(count));
    rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(count));
    return pool;
}

Tensor gather_images(const Tensor& images, const std::vector<int>& idx) {
    const int h = images.dim(1), w = images.dim(2);
    const std::size_t px = static_cast<std::size_t>(h) * w;
    Tensor out({static_cast<int>(idx.size()), 1, h, w});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int j = idx[i];
        if (j < 0 || j >= images.dim(0))
            throw std::runtime_error("gather: index " + std::to_string(j) + " out of range");
        std::copy_n(images.ptr() + static_cast<std::size_t>(j) * px, px, out.ptr() + i * px);
    }
    return out;
}

Tensor as_batch1(const Tensor& image) {
    if (image.rank() != 2) throw std::runtime_error("expected a [H,W] image, got " + image.shape_str());
    Tensor out({1, 1, image.dim(0), image.dim(1)});
    out.data = image.data;
    return out;
}

}  // namespace clarity
