#include "shallowiv/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "shallowiv/errors.hpp"

namespace shallowiv::neural {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'H', 'I', 'V', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxWidth = 1u << 16;
constexpr std::uint32_t kMaxDepth = 64;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::uint32_t activation_code(Activation a) { return static_cast<std::uint32_t>(a); }

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError("checkpoint: truncated file");
    return value;
}

} // namespace

void write_checkpoint(std::ostream& out, const VolNetwork& net) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, activation_code(net.config().hidden));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.config().widths.size()));
    for (int w : net.config().widths) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    for (double v : net.flatten()) put<double>(out, v);
    if (!out) throw ParseError("checkpoint: write failed");
}

VolNetwork read_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw ParseError("checkpoint: bad magic");
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    const auto code = get<std::uint32_t>(in);
    if (code > activation_code(Activation::Softplus)) throw ParseError("checkpoint: unknown activation code");
    const auto depth = get<std::uint32_t>(in);
    if (depth == 0 || depth > kMaxDepth) throw ParseError("checkpoint: bad layer count");
    NetworkConfig cfg;
    cfg.hidden = static_cast<Activation>(code);
    cfg.widths.clear();
    for (std::uint32_t i = 0; i < depth; ++i) {
        const auto w = get<std::uint32_t>(in);
        if (w == 0 || w > kMaxWidth) throw ParseError("checkpoint: bad width");
        cfg.widths.push_back(static_cast<int>(w));
    }
    VolNetwork net(cfg);
    std::vector<double> flat(net.parameter_count());
    for (auto& v : flat) v = get<double>(in);
    net.assign(flat);
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const VolNetwork& net) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    write_checkpoint(out, net);
}

VolNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_checkpoint(in);
}

} // namespace shallowiv::neural
