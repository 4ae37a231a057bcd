#include "lfrr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace lfrr {

namespace {

constexpr char kMagic[5] = {'L', 'F', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little,
              "payload swizzling for big-endian hosts is not implemented");

template <class T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& f, const std::string& path) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    if (f.gcount() != static_cast<std::streamsize>(sizeof v))
        throw TruncatedFile(path + ": checkpoint ends mid-record");
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const ModelParams& p,
                      const std::string& config_text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(config_text.size()));
    f.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

    std::uint32_t count = 0;
    visit_params(p, [&count](const std::string&, const Tensor&) { ++count; });
    put<std::uint32_t>(f, count);

    visit_params(p, [&f](const std::string& name, const Tensor& t) {
        put<std::uint16_t>(f, static_cast<std::uint16_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint8_t>(f, static_cast<std::uint8_t>(t.shape.rank()));
        for (auto d : t.shape.dims()) put<std::int64_t>(f, d);
        f.write(reinterpret_cast<const char*>(t.ptr()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
    });
    if (!f) throw IoError("write failed for " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for reading");

    char magic[5];
    f.read(magic, sizeof magic);
    if (f.gcount() != sizeof magic) throw TruncatedFile(path + ": shorter than the magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw BadMagic(path + ": not a checkpoint file");
    if (magic[4] != '1') throw BadVersion(path + ": unsupported checkpoint revision");

    CheckpointData out;
    const auto cfg_len = get<std::uint32_t>(f, path);
    out.config_text.resize(cfg_len);
    f.read(out.config_text.data(), cfg_len);
    if (f.gcount() != static_cast<std::streamsize>(cfg_len))
        throw TruncatedFile(path + ": config text cut short");

    const auto count = get<std::uint32_t>(f, path);
    out.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint16_t>(f, path);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        if (f.gcount() != static_cast<std::streamsize>(name_len))
            throw TruncatedFile(path + ": parameter name cut short");
        const auto rank = get<std::uint8_t>(f, path);
        if (rank > 8) throw BadVersion(path + ": implausible tensor rank");
        std::vector<std::int64_t> dims;
        for (int d = 0; d < rank; ++d) {
            const auto v = get<std::int64_t>(f, path);
            if (v < 1 || v > (1 << 24)) throw DimensionOverflow(path + ": bad dimension");
            dims.push_back(v);
        }
        Tensor t{Shape(dims)};
        f.read(reinterpret_cast<char*>(t.ptr()),
               static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (f.gcount() != static_cast<std::streamsize>(t.numel() * sizeof(double)))
            throw TruncatedFile(path + ": tensor data cut short");
        out.entries.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

ModelParams load_model_params(const ModelConfig& cfg, const CheckpointData& data) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : data.entries) by_name[name] = &t;

    ModelParams p = init_model_params(cfg, 0);
    visit_params(p, [&by_name](const std::string& name, Tensor& t) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ConfigMismatch("checkpoint is missing parameter '" + name + "'");
        if (it->second->shape != t.shape)
            throw ConfigMismatch("checkpoint parameter '" + name + "' has shape " +
                                 it->second->shape.str() + ", config expects " +
                                 t.shape.str());
        *t.data = *it->second->data;
    });
    return p;
}

}  // namespace lfrr
