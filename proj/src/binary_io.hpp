#ifndef MSCOPE_SRC_BINARY_IO_HPP
#define MSCOPE_SRC_BINARY_IO_HPP

#include "mscope/common.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>

// Little-endian helpers shared by the PCLD and DMAT formats.
namespace mscope::detail {

class LeWriter {
public:
    explicit LeWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc)
    {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }

    void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

    template <typename T>
    void put(T value)
    {
        static_assert(std::is_trivially_copyable_v<T>);
        std::array<char, sizeof(T)> buf{};
        std::memcpy(buf.data(), &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
        out_.write(buf.data(), sizeof(T));
    }

    void finish()
    {
        out_.flush();
        if (!out_) throw IoError("write to '" + path_ + "' failed");
    }

private:
    std::string path_;
    std::ofstream out_;
};

class LeReader {
public:
    explicit LeReader(const std::string& path) : path_(path), in_(path, std::ios::binary)
    {
        if (!in_) throw IoError("cannot open '" + path + "'");
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0, std::ios::beg);
    }

    std::uint64_t file_size() const { return size_; }
    std::uint64_t remaining() const { return size_ - consumed_; }

    std::string bytes(std::size_t n)
    {
        require(n);
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        consumed_ += n;
        return s;
    }

    template <typename T>
    T get()
    {
        require(sizeof(T));
        std::array<char, sizeof(T)> buf{};
        in_.read(buf.data(), sizeof(T));
        consumed_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
        T value;
        std::memcpy(&value, buf.data(), sizeof(T));
        return value;
    }

private:
    void require(std::uint64_t n) const
    {
        if (remaining() < n) throw FormatError("'" + path_ + "' is truncated");
    }

    std::string path_;
    std::ifstream in_;
    std::uint64_t size_ = 0;
    std::uint64_t consumed_ = 0;
};

}  // namespace mscope::detail

#endif  // MSCOPE_SRC_BINARY_IO_HPP
