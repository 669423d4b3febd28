#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "skg/errors.hpp"
#include "skg/nn/config.hpp"
#include "skg/nn/infusion_net.hpp"
#include "skg/nn/vocabulary.hpp"

namespace skg::nn {

// Model file, all integers little-endian:
//   "SKGMODEL"                           8-byte magic
//   u32 version                          currently 1
//   u32 n, n x (str key, str value)      ModelConfig::to_map()
//   u32 n, n x str                       vocabulary words by id
//   u32 n, n x (str name, u32 rows, u32 cols, rows*cols x f64)   tensors, row-major
// where str = u32 byte length followed by the bytes.

inline constexpr std::array<char, 8> model_magic = {'S', 'K', 'G', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t model_version = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline void put_f64(std::ostream& os, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        os.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
}

inline void put_str(std::ostream& os, std::string const& s)
{
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint64_t get_le(std::istream& is, int bytes)
{
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        int c = is.get();
        if (c == std::char_traits<char>::eof()) {
            throw FormatError("model file truncated", 0);
        }
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

inline std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_le(is, 4)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le(is, 8)); }

inline std::string get_str(std::istream& is)
{
    auto n = get_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (static_cast<std::uint32_t>(is.gcount()) != n) {
        throw FormatError("model file truncated", 0);
    }
    return s;
}

}  // namespace detail

template <typename T>
void save_model(std::ostream& os, InfusionNet<T> const& net, Vocabulary const& vocab)
{
    os.write(model_magic.data(), model_magic.size());
    detail::put_u32(os, model_version);
    auto cfg = net.config().to_map();
    detail::put_u32(os, static_cast<std::uint32_t>(cfg.size()));
    for (auto const& [k, v] : cfg) {
        detail::put_str(os, k);
        detail::put_str(os, v);
    }
    detail::put_u32(os, static_cast<std::uint32_t>(vocab.size()));
    for (auto const& w : vocab.words()) {
        detail::put_str(os, w);
    }
    auto tensors = net.params().all();
    detail::put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (auto const* t : tensors) {
        detail::put_str(os, t->name);
        detail::put_u32(os, static_cast<std::uint32_t>(t->value.rows()));
        detail::put_u32(os, static_cast<std::uint32_t>(t->value.cols()));
        for (Eigen::Index i = 0; i < t->value.size(); ++i) {
            detail::put_f64(os, static_cast<double>(t->value.data()[i]));
        }
    }
}

template <typename T>
struct LoadedModel {
    Vocabulary vocab;
    InfusionNet<T> net;
};

template <typename T>
LoadedModel<T> load_model(std::istream& is)
{
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (is.gcount() != 8 || magic != model_magic) {
        throw FormatError("not a model file (bad magic)", 0);
    }
    if (auto v = detail::get_u32(is); v != model_version) {
        throw FormatError("unsupported model version " + std::to_string(v), 0);
    }
    std::map<std::string, std::string> kv;
    for (auto n = detail::get_u32(is); n > 0; --n) {
        auto key = detail::get_str(is);
        kv[key] = detail::get_str(is);
    }
    ModelConfig cfg;
    cfg.apply(kv);

    Vocabulary vocab;
    auto words = detail::get_u32(is);
    for (std::uint32_t i = 0; i < words; ++i) {
        auto w = detail::get_str(is);
        if (i >= 3 && vocab.add(w) != i) {
            throw FormatError("duplicate vocabulary word '" + w + "'", 0);
        }
    }
    if (vocab.size() != cfg.vocab_size) {
        throw FormatError("vocabulary size disagrees with the stored config", 0);
    }

    LoadedModel<T> out{std::move(vocab), InfusionNet<T>(cfg)};
    std::map<std::string, Tensor<T>*> by_name;
    for (auto* t : out.net.params().all()) {
        by_name[t->name] = t;
    }
    auto count = detail::get_u32(is);
    if (count != by_name.size()) {
        throw FormatError("tensor count mismatch", 0);
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name = detail::get_str(is);
        auto rows = detail::get_u32(is);
        auto cols = detail::get_u32(is);
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw FormatError("unknown tensor '" + name + "'", 0);
        }
        auto& m = it->second->value;
        if (static_cast<Eigen::Index>(rows) != m.rows() || static_cast<Eigen::Index>(cols) != m.cols()) {
            throw FormatError("tensor '" + name + "' has the wrong shape", 0);
        }
        for (Eigen::Index j = 0; j < m.size(); ++j) {
            m.data()[j] = static_cast<T>(detail::get_f64(is));
        }
    }
    out.net.params().zero_grad();
    return out;
}

}  // namespace skg::nn
