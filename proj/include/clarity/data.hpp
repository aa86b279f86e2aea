#pragma once

#include <string>
#include <vector>

#include "clarity/rng.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

struct ImageDataset {
    Tensor images;            // [N, 28, 28], values in [0,1]
    std::vector<int> labels;  // 0..9
    std::string split;        // "train" | "test"

    int size() const { return images.rank() ? images.dim(0) : 0; }
    void validate() const;
};

// IDX readers/writers: big-endian magics 2051 (images) and 2049 (labels),
// pixels scaled to [0,1] by /255 on load.
Tensor load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
ImageDataset load_idx(const std::string& image_path, const std::string& label_path,
                      const std::string& split);
void write_idx_images(const std::string& path, const Tensor& images);  // re-quantizes by round(255v)
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

struct MnistData {
    ImageDataset train, test;
};
MnistData load_mnist(const std::string& dir);

// one epoch: a full shuffled permutation cut into batches, short tail kept
std::vector<std::vector<int>> batches(int n, int batch_size, Rng& rng);

// `count` distinct images of class y, sampled without replacement
std::vector<int> pair_sampler(const ImageDataset& ds, int y, int y_prime, int count, Rng& rng);

std::vector<int> indices_of_class(const std::vector<int>& labels, int cls);

// gather images into a [B, 1, 28, 28] batch
Tensor gather_images(const Tensor& images, const std::vector<int>& idx);

// single image [28,28] -> [1, 1, 28, 28]
Tensor as_batch1(const Tensor& image);

}  // namespace clarity
