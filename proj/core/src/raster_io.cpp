#include "radiotwin/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace rtwin {

namespace {

// Mask RLE: alternating run lengths starting with the number of leading
// zeros, scanning row-major.
std::vector<std::uint32_t> rle_encode(const Grid<std::uint8_t>& mask) {
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;
    std::uint32_t count = 0;
    for (auto v : mask.data()) {
        const std::uint8_t bit = v ? 1 : 0;
        if (bit == current) {
            ++count;
        } else {
            runs.push_back(count);
            current = bit;
            count = 1;
        }
    }
    runs.push_back(count);
    return runs;
}

Grid<std::uint8_t> rle_decode(const std::vector<std::uint32_t>& runs, int rows,
                              int cols) {
    Grid<std::uint8_t> mask(rows, cols);
    std::size_t pos = 0;
    std::uint8_t current = 0;
    for (auto run : runs) {
        for (std::uint32_t i = 0; i < run; ++i) {
            if (pos >= mask.data().size())
                throw std::runtime_error("raster sidecar: mask RLE overruns grid");
            mask.data()[pos++] = current;
        }
        current = current ? 0 : 1;
    }
    if (pos != mask.data().size())
        throw std::runtime_error("raster sidecar: mask RLE does not fill grid");
    return mask;
}

void write_floats(const Grid<float>& g, const std::string& path) {
    static_assert(sizeof(float) == 4);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write raster: " + path);
    // Host is assumed little-endian (x86/arm64); format is declared LE.
    out.write(reinterpret_cast<const char*>(g.data().data()),
              static_cast<std::streamsize>(g.data().size() * sizeof(float)));
}

}  // namespace

void write_raster(const RadioMap& map, const std::string& path) {
    write_floats(map.values, path);

    nlohmann::json side;
    side["transform"] = nlohmann::json::parse(map.transform.to_json());
    side["mask_rle"] = rle_encode(map.valid);
    side["coverage_fraction"] = map.coverage_fraction;
    std::ofstream out(path + ".json");
    if (!out)
        throw std::runtime_error("cannot write sidecar: " + path + ".json");
    out << side.dump(2) << '\n';
}

RadioMap read_raster(const std::string& path) {
    std::ifstream side_in(path + ".json");
    if (!side_in)
        throw std::runtime_error("cannot open sidecar: " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(side_in);

    RadioMap map(GeoTransform::from_json(side.at("transform").dump()));
    const int n = map.transform.size();

    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open raster: " + path);
    in.read(reinterpret_cast<char*>(map.values.data().data()),
            static_cast<std::streamsize>(map.values.data().size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(map.values.data().size() *
                                                    sizeof(float)))
        throw std::runtime_error("raster truncated: " + path);

    map.valid = rle_decode(side.at("mask_rle").get<std::vector<std::uint32_t>>(), n, n);
    map.coverage_fraction = side.at("coverage_fraction").get<double>();
    return map;
}

void write_layer(const Grid<float>& layer, const GeoTransform& t,
                 const std::string& path) {
    write_floats(layer, path);
    nlohmann::json side;
    side["transform"] = nlohmann::json::parse(t.to_json());
    side["coverage_fraction"] = 1.0;
    std::vector<std::uint32_t> runs{0,
                                    static_cast<std::uint32_t>(layer.data().size())};
    side["mask_rle"] = runs;
    std::ofstream out(path + ".json");
    out << side.dump(2) << '\n';
}

void write_pgm(const RadioMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write pgm: " + path);
    const int n = map.transform.size();
    out << "P5\n" << n << ' ' << n << "\n255\n";
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double v = 0.0;
            if (map.valid.at(r, c))
                v = (map.values.at(r, c) + 140.0) / 100.0 * 255.0;
            const auto b = static_cast<unsigned char>(
                std::clamp(std::lround(v), 0L, 255L));
            out.put(static_cast<char>(b));
        }
    }
}

}  // namespace rtwin
