#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tavaal/data/dataset.hpp"
#include "tavaal/error.hpp"

namespace tavaal::data {

inline constexpr std::uint32_t idx_image_magic = 0x00000803;
inline constexpr std::uint32_t idx_label_magic = 0x00000801;

struct IdxImages {
    std::uint32_t count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels; // count * rows * cols
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t at, const std::string& path) {
    if (buf.size() < at + 4) throw FormatError(path + ": truncated header");
    return (std::uint32_t{buf[at]} << 24) | (std::uint32_t{buf[at + 1]} << 16) | (std::uint32_t{buf[at + 2]} << 8) |
           std::uint32_t{buf[at + 3]};
}

inline void put_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

} // namespace detail

inline IdxImages read_idx_images(const std::string& path) {
    const auto buf = detail::read_file(path);
    const std::uint32_t magic = detail::read_be32(buf, 0, path);
    if (magic != idx_image_magic) throw FormatError(path + ": not an IDX image file (bad magic)");
    IdxImages img;
    img.count = detail::read_be32(buf, 4, path);
    img.rows = detail::read_be32(buf, 8, path);
    img.cols = detail::read_be32(buf, 12, path);
    const std::size_t n = std::size_t{img.count} * img.rows * img.cols;
    if (buf.size() < 16 + n) throw FormatError(path + ": truncated pixel data");
    img.pixels.assign(buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(n));
    return img;
}

inline std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
    const auto buf = detail::read_file(path);
    const std::uint32_t magic = detail::read_be32(buf, 0, path);
    if (magic != idx_label_magic) throw FormatError(path + ": not an IDX label file (bad magic)");
    const std::uint32_t count = detail::read_be32(buf, 4, path);
    if (buf.size() < 8 + std::size_t{count}) throw FormatError(path + ": truncated label data");
    return {buf.begin() + 8, buf.begin() + 8 + count};
}

inline void write_idx_images(const std::string& path, const IdxImages& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    detail::put_be32(out, idx_image_magic);
    detail::put_be32(out, img.count);
    detail::put_be32(out, img.rows);
    detail::put_be32(out, img.cols);
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    detail::put_be32(out, idx_label_magic);
    detail::put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

/// Reads an IDX image/label pair into a {1,H,W} dataset with pixels scaled
/// to [0, 1] and then normalised. With `stats` given (e.g. from the training
/// split) those are applied; otherwise they are computed from this file.
/// `num_classes` of 0 means max label + 1.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        const Normalization* stats = nullptr, std::size_t num_classes = 0) {
    const IdxImages img = read_idx_images(images_path);
    const auto labels = read_idx_labels(labels_path);
    if (labels.size() != img.count)
        throw ConsistencyError("load_idx: " + std::to_string(img.count) + " images but " +
                               std::to_string(labels.size()) + " labels");
    Dataset ds;
    ds.sample_shape = {1, img.rows, img.cols};
    ds.features.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) ds.features[i] = img.pixels[i] / 255.0;
    ds.labels.assign(labels.begin(), labels.end());
    std::size_t max_label = 0;
    for (auto l : labels) max_label = std::max<std::size_t>(max_label, l);
    ds.num_classes = num_classes ? num_classes : std::max<std::size_t>(2, max_label + 1);
    ds.validate();
    apply_normalization(ds, stats ? *stats : compute_normalization(ds));
    return ds;
}

} // namespace tavaal::data
