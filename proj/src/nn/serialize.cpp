#include "ccid/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ccid::nn {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'I', 'D', 'P', 'A', 'R', 'M'};

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <typename U>
    void le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

    const std::uint8_t* raw(std::size_t n) {
        if (in_.size() - pos_ < n) throw ParamFormatError("parameter file is truncated");
        const std::uint8_t* p = in_.data() + pos_;
        pos_ += n;
        return p;
    }
    template <typename U>
    U le() {
        const std::uint8_t* p = raw(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
        return v;
    }
    [[nodiscard]] bool done() const noexcept { return pos_ == in_.size(); }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_params(const ModelParams& params) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.le<std::uint32_t>(ModelParams::kFormatVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    for (const auto& e : params.entries()) {
        if (e.name.size() > 0xFFFF) throw InvalidArgument("parameter name too long");
        w.le<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
        w.raw(e.name.data(), e.name.size());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(e.tensor.rank()));
        for (int d : e.tensor.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
        for (float v : e.tensor.values()) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
    return w.take();
}

ModelParams decode_params(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    if (bytes.size() < sizeof kMagic || std::memcmp(r.raw(sizeof kMagic), kMagic, sizeof kMagic) != 0) {
        throw ParamFormatError("not a parameter file (bad magic)");
    }
    const auto version = r.le<std::uint32_t>();
    if (version != ModelParams::kFormatVersion) {
        throw ParamFormatError("unsupported parameter file version " + std::to_string(version));
    }
    const auto count = r.le<std::uint32_t>();
    ModelParams params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.le<std::uint16_t>();
        const auto* name = r.raw(len);
        std::string key(reinterpret_cast<const char*>(name), len);
        const auto rank = r.le<std::uint8_t>();
        std::vector<int> shape;
        std::size_t n = 1;
        for (int k = 0; k < rank; ++k) {
            const auto d = r.le<std::uint32_t>();
            if (d == 0 || d > (1u << 24)) throw ParamFormatError("implausible dimension in '" + key + "'");
            shape.push_back(static_cast<int>(d));
            n *= d;
        }
        if (n > bytes.size()) throw ParamFormatError("parameter file is truncated");
        std::vector<float> values(n);
        for (float& v : values) v = std::bit_cast<float>(r.le<std::uint32_t>());
        try {
            params.add(std::move(key), Tensor(std::move(shape), std::move(values)));
        } catch (const InvalidArgument& e) {
            throw ParamFormatError(e.what());
        }
    }
    if (!r.done()) throw ParamFormatError("trailing bytes after the last tensor");
    return params;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
    const auto bytes = encode_params(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParamFormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParamFormatError("failed writing " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParamFormatError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_params(bytes);
}

}  // namespace ccid::nn
