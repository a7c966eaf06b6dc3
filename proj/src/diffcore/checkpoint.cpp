#include "vectorworld/diffcore/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vw::diff {

namespace {
constexpr char kMagic[4] = {'V', 'W', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for write");
    os.write(kMagic, 4);
    put<uint32_t>(os, kVersion);
    put<uint64_t>(os, store.names().size());
    for (const auto& name : store.names()) {
        const Tensor& t = store.get(name);
        put<uint32_t>(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<uint32_t>(os, static_cast<uint32_t>(t.rows()));
        put<uint32_t>(os, static_cast<uint32_t>(t.cols()));
        os.write(reinterpret_cast<const char*>(t.values().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

std::shared_ptr<ParamStore> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    uint32_t version = get<uint32_t>(is);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    uint64_t count = get<uint64_t>(is);
    auto store = std::make_shared<ParamStore>();
    for (uint64_t e = 0; e < count; ++e) {
        uint32_t len = get<uint32_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        uint32_t rows = get<uint32_t>(is);
        uint32_t cols = get<uint32_t>(is);
        std::vector<double> data(static_cast<size_t>(rows) * cols);
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated entry '" + name + "'");
        store->add(name, Tensor(static_cast<int>(rows), static_cast<int>(cols), std::move(data)));
    }
    return store;
}

}  // namespace vw::diff
