#pragma once

#include "risloc/error.hpp"
#include "risloc/hash.hpp"

#include <bit>
#include <istream>
#include <ostream>
#include <span>
#include <string>

namespace risloc::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// Raw little-endian writes/reads that also feed a running content hash.
template <typename T>
void put_array(std::ostream& out, Fnv1a& hash, const T* data, std::size_t count) {
  const auto bytes = std::as_bytes(std::span(data, count));
  hash.update(bytes);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
void put(std::ostream& out, Fnv1a& hash, const T& value) {
  put_array(out, hash, &value, 1);
}

template <typename T>
void get_array(std::istream& in, Fnv1a& hash, T* data, std::size_t count, const std::string& what) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw FormatError("truncated " + what);
  hash.update(std::as_bytes(std::span(data, count)));
}

template <typename T>
T get(std::istream& in, Fnv1a& hash, const std::string& what) {
  T value{};
  get_array(in, hash, &value, 1, what);
  return value;
}

}  // namespace risloc::io
