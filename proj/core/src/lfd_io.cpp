#include "lfrr/lfd_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace lfrr {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'D', '1'};
constexpr std::size_t kHeaderBytes = 24;

static_assert(std::endian::native == std::endian::little,
              "payload swizzling for big-endian hosts is not implemented");

void put_u32(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
    p[2] = static_cast<unsigned char>(v >> 16);
    p[3] = static_cast<unsigned char>(v >> 24);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_lfd(const std::filesystem::path& path, const LightField& lf,
               LfdDtype dtype) {
    if (lf.U() > std::numeric_limits<std::uint32_t>::max() ||
        lf.V() > std::numeric_limits<std::uint32_t>::max() ||
        lf.X() > std::numeric_limits<std::uint32_t>::max() ||
        lf.Y() > std::numeric_limits<std::uint32_t>::max() || lf.C() > 255)
        throw DimensionOverflow("light field dims do not fit the file header");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");

    unsigned char header[kHeaderBytes] = {};
    std::memcpy(header, kMagic, 4);
    header[4] = static_cast<unsigned char>(dtype);
    header[5] = static_cast<unsigned char>(lf.C());
    put_u32(header + 8, static_cast<std::uint32_t>(lf.U()));
    put_u32(header + 12, static_cast<std::uint32_t>(lf.V()));
    put_u32(header + 16, static_cast<std::uint32_t>(lf.X()));
    put_u32(header + 20, static_cast<std::uint32_t>(lf.Y()));
    f.write(reinterpret_cast<const char*>(header), kHeaderBytes);

    const auto& data = lf.data();
    if (dtype == LfdDtype::F64) {
        f.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
    } else {
        std::vector<float> f32(data.begin(), data.end());
        f.write(reinterpret_cast<const char*>(f32.data()),
                static_cast<std::streamsize>(f32.size() * sizeof(float)));
    }
    if (!f) throw IoError("write failed for " + path.string());
}

LightField read_lfd(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for reading");

    unsigned char header[kHeaderBytes];
    f.read(reinterpret_cast<char*>(header), kHeaderBytes);
    if (f.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        throw TruncatedFile(path.string() + ": header shorter than 24 bytes");

    if (std::memcmp(header, kMagic, 3) != 0)
        throw BadMagic(path.string() + ": not an LFD file");
    if (header[3] != '1')
        throw BadVersion(path.string() + ": unsupported LFD revision");

    const unsigned dtype_code = header[4];
    if (dtype_code > 1)
        throw BadVersion(path.string() + ": unknown dtype code " + std::to_string(dtype_code));
    const auto dtype = static_cast<LfdDtype>(dtype_code);

    const std::int64_t C = header[5];
    const std::int64_t U = get_u32(header + 8);
    const std::int64_t V = get_u32(header + 12);
    const std::int64_t X = get_u32(header + 16);
    const std::int64_t Y = get_u32(header + 20);
    if (U < 1 || V < 1 || X < 1 || Y < 1 || C < 1)
        throw DimensionOverflow(path.string() + ": zero dimension in header");

    const unsigned __int128 wide = static_cast<unsigned __int128>(U) * V * X * Y * C;
    if (wide > (static_cast<unsigned __int128>(1) << 40))
        throw DimensionOverflow(path.string() + ": element count does not fit in memory");
    const std::size_t n = static_cast<std::size_t>(wide);

    std::vector<double> data(n);
    if (dtype == LfdDtype::F64) {
        f.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(n * sizeof(double)));
        if (f.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
            throw TruncatedFile(path.string() + ": payload shorter than header promises");
    } else {
        std::vector<float> f32(n);
        f.read(reinterpret_cast<char*>(f32.data()),
               static_cast<std::streamsize>(n * sizeof(float)));
        if (f.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
            throw TruncatedFile(path.string() + ": payload shorter than header promises");
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<double>(f32[i]);
    }
    // Full validation: files written by us are always in [0,1], so a value
    // outside the range means corruption.
    return LightField(U, V, X, Y, C, std::move(data));
}

}  // namespace lfrr
