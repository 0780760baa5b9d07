#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

// Little-endian binary readers/writers shared by the dataset and checkpoint
// formats. Byte order is explicit so files are portable across platforms.
namespace capfield::binio {

enum class IoErrorCode {
    BadMagic,
    BadVersion,
    Truncated,
    BadValue,
    OpenFailed,
};

struct IoError : std::runtime_error {
    IoErrorCode code;
    IoError(IoErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(bytes), 4);
}

inline void put_u8(std::ostream& os, std::uint8_t v) {
    os.write(reinterpret_cast<const char*>(&v), 1);
}

inline void put_f64(std::ostream& os, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(bytes), 8);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char bytes[4];
    if (!is.read(reinterpret_cast<char*>(bytes), 4)) {
        throw IoError(IoErrorCode::Truncated, "truncated payload reading u32");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

inline std::uint8_t get_u8(std::istream& is) {
    unsigned char byte;
    if (!is.read(reinterpret_cast<char*>(&byte), 1)) {
        throw IoError(IoErrorCode::Truncated, "truncated payload reading u8");
    }
    return byte;
}

inline double get_f64(std::istream& is) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) {
        throw IoError(IoErrorCode::Truncated, "truncated payload reading f64");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline void put_magic(std::ostream& os, const char magic[4]) {
    os.write(magic, 4);
}

inline void check_magic(std::istream& is, const char magic[4], const std::string& what) {
    char got[4];
    if (!is.read(got, 4)) {
        throw IoError(IoErrorCode::Truncated, "truncated payload reading magic of " + what);
    }
    for (int i = 0; i < 4; ++i) {
        if (got[i] != magic[i]) {
            throw IoError(IoErrorCode::BadMagic, "bad magic for " + what);
        }
    }
}

}  // namespace capfield::binio
