#pragma once

#include <zlib.h>

#include <cstdint>
#include <string>
#include <vector>

#include "champ/types.hpp"

namespace champ::data {

namespace detail {

// Reads a whole file through zlib, which transparently handles both raw and
// gzip-compressed inputs.
inline std::vector<unsigned char> read_file_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::vector<unsigned char> bytes;
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0)
        bytes.insert(bytes.end(), buf, buf + n);
    const bool read_error = n < 0;
    gzclose(f);
    if (read_error) throw std::runtime_error("read error in " + path);
    return bytes;
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off,
                          const std::string& path) {
    if (off + 4 > b.size())
        throw std::runtime_error("truncated IDX file " + path + " at offset " +
                                 std::to_string(off));
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) |
           static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace detail

// IDX image/label pair (optionally gzipped). Pixel bytes are scaled by 1/255.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        int class_count = 10) {
    const auto img = detail::read_file_maybe_gz(images_path);
    const auto lbl = detail::read_file_maybe_gz(labels_path);

    if (detail::be32(img, 0, images_path) != 0x00000803u)
        throw std::runtime_error("bad IDX image magic in " + images_path + " at offset 0");
    if (detail::be32(lbl, 0, labels_path) != 0x00000801u)
        throw std::runtime_error("bad IDX label magic in " + labels_path + " at offset 0");

    const std::uint32_t n_img = detail::be32(img, 4, images_path);
    const std::uint32_t rows = detail::be32(img, 8, images_path);
    const std::uint32_t cols = detail::be32(img, 12, images_path);
    const std::uint32_t n_lbl = detail::be32(lbl, 4, labels_path);
    if (n_img != n_lbl)
        throw std::runtime_error("IDX count mismatch: " + std::to_string(n_img) +
                                 " images vs " + std::to_string(n_lbl) + " labels");

    const std::size_t pix_per_img = static_cast<std::size_t>(rows) * cols;
    if (img.size() < 16 + static_cast<std::size_t>(n_img) * pix_per_img)
        throw std::runtime_error("truncated IDX file " + images_path + " at offset " +
                                 std::to_string(img.size()));
    if (lbl.size() < 8 + n_lbl)
        throw std::runtime_error("truncated IDX file " + labels_path + " at offset " +
                                 std::to_string(lbl.size()));

    Dataset ds;
    ds.class_count = class_count;
    ds.items.resize(n_img);
    const Shape shape{1, static_cast<int>(rows), static_cast<int>(cols)};
    for (std::uint32_t i = 0; i < n_img; ++i) {
        auto& item = ds.items[i];
        item.label = lbl[8 + i];
        if (item.label >= class_count)
            throw std::runtime_error("IDX label " + std::to_string(item.label) +
                                     " out of range in " + labels_path);
        item.image.shape = shape;
        item.image.pixels.resize(pix_per_img);
        const unsigned char* src = img.data() + 16 + i * pix_per_img;
        for (std::size_t p = 0; p < pix_per_img; ++p)
            item.image.pixels[p] = static_cast<double>(src[p]) / 255.0;
    }
    return ds;
}

}  // namespace champ::data
