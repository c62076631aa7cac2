#pragma once

#include "flowplan/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace flowplan::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <class T>
T to_little(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

/// Little-endian writer over an ofstream.
class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
    }

    template <class T>
    void put(T v) {
        v = to_little(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    template <class T>
    void put_all(std::span<const T> values) {
        if constexpr (std::endian::native == std::endian::little) {
            out_.write(reinterpret_cast<const char*>(values.data()),
                       static_cast<std::streamsize>(values.size_bytes()));
        } else {
            for (const T& v : values) put(v);
        }
    }

    void put_bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

    void close() {
        out_.flush();
        if (!out_) throw IoError("write failed for '" + path_.string() + "'");
        out_.close();
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

/// Little-endian reader that fails loudly on truncation.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path.string() + "'");
    }

    template <class T>
    T get() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw IoError("'" + path_.string() + "' is truncated");
        return to_little(v);
    }

    template <class T>
    std::vector<T> get_all(std::size_t n) {
        std::vector<T> v(n);
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
        if (!in_) throw IoError("'" + path_.string() + "' is truncated");
        if constexpr (std::endian::native != std::endian::little)
            for (auto& x : v) x = to_little(x);
        return v;
    }

    void get_bytes(char* data, std::size_t n) {
        in_.read(data, static_cast<std::streamsize>(n));
        if (!in_) throw IoError("'" + path_.string() + "' is truncated");
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::filesystem::path path_;
    std::ifstream in_;
};

/// Write doubles as little-endian float32.
inline void write_f32(const std::filesystem::path& path, std::span<const double> values) {
    std::vector<float> f(values.begin(), values.end());
    Writer w(path);
    w.put_all<float>(f);
    w.close();
}

inline std::vector<double> read_f32(const std::filesystem::path& path, std::size_t n) {
    Reader r(path);
    auto f = r.get_all<float>(n);
    if (!r.at_end()) throw IoError("'" + path.string() + "' is longer than expected");
    return {f.begin(), f.end()};
}

} // namespace flowplan::io
