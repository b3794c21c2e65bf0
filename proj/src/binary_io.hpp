#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mtp::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream &out, T value) {
    out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
void write_array(std::ostream &out, const T *data, std::size_t count) {
    out.write(reinterpret_cast<const char *>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
T read_pod(std::istream &in, const std::string &what) {
    T value;
    if (!in.read(reinterpret_cast<char *>(&value), sizeof(T))) throw std::runtime_error(what + ": truncated file");
    return value;
}

template <typename T>
void read_array(std::istream &in, T *data, std::size_t count, const std::string &what) {
    if (!in.read(reinterpret_cast<char *>(data), static_cast<std::streamsize>(count * sizeof(T)))) {
        throw std::runtime_error(what + ": truncated file");
    }
}

}  // namespace mtp::io
