#include <fstream>
#include <iterator>
#include <sstream>

#include "noiselab/data.hpp"
#include "noiselab/error.hpp"

namespace noiselab {

namespace {

constexpr std::uint8_t kTypeU8 = 0x08;
constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 34;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string file) : bytes_(bytes), file_(std::move(file)) {}

    std::uint32_t u32(const std::string& field) {
        if (bytes_.size() - pos_ < 4) fail(field, "file truncated");
        const std::uint32_t v = (std::uint32_t(bytes_[pos_]) << 24) | (std::uint32_t(bytes_[pos_ + 1]) << 16) |
                                (std::uint32_t(bytes_[pos_ + 2]) << 8) | std::uint32_t(bytes_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw FormatError(file_ + "." + field + ": " + what);
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string file_;
    std::size_t pos_ = 0;
};

std::string hex(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

}  // namespace

Dataset load_idx_pair(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      int num_classes) {
    if (num_classes < 2) throw ArgumentError("class count must be at least 2");

    const auto image_bytes = read_all(images_path);
    ByteReader images(image_bytes, "images");
    const std::uint32_t image_magic = images.u32("magic");
    const std::uint32_t ndims = image_magic & 0xffu;
    if ((image_magic >> 8) != kTypeU8 || ndims < 3) {
        images.fail("magic", "expected 0x00000803 or a u8 tensor with more dims, got " + hex(image_magic));
    }
    const std::uint32_t image_count = images.u32("dims[0]");
    std::uint64_t feature_dim = 1;
    for (std::uint32_t k = 1; k < ndims; ++k) {
        const std::uint32_t dim = images.u32("dims[" + std::to_string(k) + "]");
        if (dim == 0) images.fail("dims[" + std::to_string(k) + "]", "zero extent");
        feature_dim *= dim;
        if (feature_dim > kMaxPayload) images.fail("dims[" + std::to_string(k) + "]", "tensor too large");
    }
    const std::uint64_t payload = feature_dim * image_count;
    if (payload > kMaxPayload) images.fail("dims[0]", "tensor too large");
    if (images.remaining() != payload) {
        images.fail("payload", "expected " + std::to_string(payload) + " bytes, found " +
                                   std::to_string(images.remaining()));
    }

    const auto label_bytes = read_all(labels_path);
    ByteReader labels(label_bytes, "labels");
    const std::uint32_t label_magic = labels.u32("magic");
    if (label_magic != 0x00000801u) labels.fail("magic", "expected 0x00000801, got " + hex(label_magic));
    const std::uint32_t label_count = labels.u32("dims[0]");
    if (labels.remaining() != label_count) {
        labels.fail("payload", "expected " + std::to_string(label_count) + " bytes, found " +
                                   std::to_string(labels.remaining()));
    }
    if (label_count != image_count) {
        throw FormatError("count: " + std::to_string(image_count) + " images but " + std::to_string(label_count) +
                          " labels");
    }

    Dataset d;
    d.name = images_path.stem().string();
    d.num_classes = num_classes;
    d.feature_dim = static_cast<std::size_t>(feature_dim);
    d.split = Split::train;
    d.samples.resize(image_count);
    const std::size_t image_offset = images.position();
    const std::size_t label_offset = labels.position();
    for (std::size_t i = 0; i < image_count; ++i) {
        Sample& s = d.samples[i];
        const std::uint8_t label = label_bytes[label_offset + i];
        if (label >= num_classes) {
            throw RangeError("labels[" + std::to_string(i) + "] = " + std::to_string(label) +
                             " is not below class count " + std::to_string(num_classes));
        }
        s.observed_label = label;
        s.true_label = label;
        s.features.resize(d.feature_dim);
        const std::uint8_t* px = image_bytes.data() + image_offset + i * d.feature_dim;
        for (std::size_t k = 0; k < d.feature_dim; ++k) s.features[k] = px[k] / 255.0;
    }
    return d;
}

void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, const std::vector<std::uint32_t>& dims) {
    if (dims.size() < 2) throw ArgumentError("IDX images need at least two item dimensions");
    std::uint64_t per_item = 1;
    for (auto d : dims) per_item *= d;
    if (per_item * count != pixels.size()) throw ArgumentError("pixel buffer does not match dimensions");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_be_u32(out, (std::uint32_t{kTypeU8} << 8) | static_cast<std::uint32_t>(dims.size() + 1));
    write_be_u32(out, count);
    for (auto d : dims) write_be_u32(out, d);
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_be_u32(out, 0x00000801u);
    write_be_u32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace noiselab
