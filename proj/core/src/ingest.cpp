#include "radiotwin/ingest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "radiotwin/geom2d.hpp"
#include "json.hpp"

namespace rtwin {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw ParseError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& origin, int line, const std::string& field,
                    const std::string& token) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size())
            fail(origin, line, "trailing characters in field '" + field + "': " + token);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        fail(origin, line, "malformed number in field '" + field + "': " + token);
    }
}

void check_record(const std::string& origin, int line, const MeasurementRecord& r) {
    if (r.rsrp_dbm < -140.0 || r.rsrp_dbm > -40.0)
        fail(origin, line, "rsrp_dbm out of range [-140, -40]");
    if (r.accuracy_m < 0.0)
        fail(origin, line, "accuracy_m must be non-negative");
    if (r.latitude < -90.0 || r.latitude > 90.0)
        fail(origin, line, "latitude out of range [-90, 90]");
    if (r.longitude < -180.0 || r.longitude > 180.0)
        fail(origin, line, "longitude out of range [-180, 180]");
}

std::vector<LonLat> parse_ring(const nlohmann::json& arr, const std::string& origin,
                               const std::string& what) {
    std::vector<LonLat> ring;
    for (const auto& v : arr) {
        if (!v.is_array() || v.size() != 2)
            throw ParseError(origin + ": " + what + ": vertex is not a [lon, lat] pair");
        ring.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    return ring;
}

std::vector<Vec2> ring_to_vec2(const std::vector<LonLat>& ring) {
    std::vector<Vec2> out;
    out.reserve(ring.size());
    for (const auto& p : ring)
        out.push_back({p.lon, p.lat});
    return out;
}

nlohmann::json ring_to_json(const std::vector<LonLat>& ring) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : ring)
        arr.push_back({p.lon, p.lat});
    return arr;
}

}  // namespace

const char* material_name(Material m) {
    switch (m) {
    case Material::Concrete: return "concrete";
    case Material::Brick: return "brick";
    case Material::Glass: return "glass";
    }
    return "concrete";
}

Material material_from_name(const std::string& name) {
    if (name == "concrete")
        return Material::Concrete;
    if (name == "brick")
        return Material::Brick;
    if (name == "glass")
        return Material::Glass;
    throw ParseError("unknown material: " + name);
}

std::vector<MeasurementRecord> parse_measurements_text(const std::string& text,
                                                       const std::string& origin) {
    std::vector<MeasurementRecord> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (lineno == 1 && line.rfind("antenna_id", 0) == 0)
            continue;  // header

        std::vector<std::string> tok;
        std::istringstream ls(line);
        std::string t;
        while (std::getline(ls, t, ','))
            tok.push_back(t);
        if (tok.size() != 8)
            fail(origin, lineno,
                 "expected 8 comma-separated fields, got " + std::to_string(tok.size()));

        MeasurementRecord r;
        r.antenna_id = tok[0];
        r.timestamp = static_cast<std::int64_t>(
            parse_double(origin, lineno, "timestamp", tok[1]));
        r.latitude = parse_double(origin, lineno, "latitude", tok[2]);
        r.longitude = parse_double(origin, lineno, "longitude", tok[3]);
        r.rsrp_dbm = parse_double(origin, lineno, "rsrp_dbm", tok[4]);
        r.sinr_db = parse_double(origin, lineno, "sinr_db", tok[5]);
        if (tok[6] != "0" && tok[6] != "1")
            fail(origin, lineno, "indoor flag must be 0 or 1");
        r.indoor = tok[6] == "1";
        r.accuracy_m = parse_double(origin, lineno, "accuracy_m", tok[7]);
        check_record(origin, lineno, r);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<MeasurementRecord> parse_measurements(const std::string& path) {
    return parse_measurements_text(read_file(path), path);
}

std::string serialize_measurements(const std::vector<MeasurementRecord>& records) {
    std::ostringstream out;
    out << "antenna_id,timestamp,latitude,longitude,rsrp_dbm,sinr_db,indoor,accuracy_m\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.antenna_id << ',' << r.timestamp << ',' << r.latitude << ','
            << r.longitude << ',' << r.rsrp_dbm << ',' << r.sinr_db << ','
            << (r.indoor ? 1 : 0) << ',' << r.accuracy_m << '\n';
    }
    return out.str();
}

std::vector<MeasurementRecord> filter_measurements(
    const std::vector<MeasurementRecord>& records, double max_accuracy_m,
    bool outdoor_only) {
    std::vector<MeasurementRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.accuracy_m > max_accuracy_m)
            continue;
        if (outdoor_only && r.indoor)
            continue;
        out.push_back(r);
    }
    return out;
}

std::vector<AntennaConfig> parse_antennas_text(const std::string& text,
                                               const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(origin + ": invalid JSON: " + e.what());
    }
    if (!j.is_array())
        throw ParseError(origin + ": expected a JSON array of antenna objects");

    std::vector<AntennaConfig> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& a = j[i];
        const std::string where = origin + ": antenna[" + std::to_string(i) + "]";
        AntennaConfig c;
        try {
            c.antenna_id = a.at("antenna_id").get<std::string>();
            c.latitude = a.at("latitude").get<double>();
            c.longitude = a.at("longitude").get<double>();
            c.height_m = a.at("height_m").get<double>();
            c.frequency_hz = a.at("frequency_hz").get<double>();
            c.azimuth_rad = a.at("azimuth_rad").get<double>();
            c.tilt_rad = a.at("tilt_rad").get<double>();
            c.tx_power_dbm = a.at("tx_power_dbm").get<double>();
            c.hardware_loss_db = a.at("hardware_loss_db").get<double>();
            c.bandwidth_hz = a.at("bandwidth_hz").get<double>();
        } catch (const std::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (c.frequency_hz <= 0.0)
            throw ParseError(where + ": frequency_hz must be positive");
        if (c.bandwidth_hz <= 0.0)
            throw ParseError(where + ": bandwidth_hz must be positive");
        if (c.height_m <= 0.0)
            throw ParseError(where + ": height_m must be positive");
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<AntennaConfig> parse_antennas(const std::string& path) {
    return parse_antennas_text(read_file(path), path);
}

std::string serialize_antennas(const std::vector<AntennaConfig>& antennas) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : antennas) {
        arr.push_back({{"antenna_id", c.antenna_id},
                       {"latitude", c.latitude},
                       {"longitude", c.longitude},
                       {"height_m", c.height_m},
                       {"frequency_hz", c.frequency_hz},
                       {"azimuth_rad", c.azimuth_rad},
                       {"tilt_rad", c.tilt_rad},
                       {"tx_power_dbm", c.tx_power_dbm},
                       {"hardware_loss_db", c.hardware_loss_db},
                       {"bandwidth_hz", c.bandwidth_hz}});
    }
    return arr.dump(2);
}

SceneData parse_scene_text(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(origin + ": invalid JSON: " + e.what());
    }

    SceneData scene;
    if (j.contains("buildings")) {
        for (std::size_t i = 0; i < j["buildings"].size(); ++i) {
            const auto& b = j["buildings"][i];
            const std::string where = origin + ": building[" + std::to_string(i) + "]";
            Building bld;
            bld.footprint = parse_ring(b.at("footprint"), origin, where);
            if (bld.footprint.size() < 3)
                throw ParseError(where + ": footprint needs at least 3 vertices");
            if (!is_simple_polygon(ring_to_vec2(bld.footprint)))
                throw ParseError(where + ": footprint is not a simple polygon");
            bld.height_m = b.at("height_m").get<double>();
            if (bld.height_m <= 0.0)
                throw ParseError(where + ": height_m must be positive");
            bld.material = material_from_name(b.at("material").get<std::string>());
            scene.buildings.push_back(std::move(bld));
        }
    }
    if (j.contains("landuse")) {
        for (std::size_t i = 0; i < j["landuse"].size(); ++i) {
            const auto& l = j["landuse"][i];
            const std::string where = origin + ": landuse[" + std::to_string(i) + "]";
            LandusePolygon lp;
            lp.polygon = parse_ring(l.at("polygon"), origin, where);
            lp.land_class = l.at("class").get<int>();
            if (lp.land_class < 0 || lp.land_class > 23)
                throw ParseError(where + ": class out of range [0, 23]");
            scene.landuse.push_back(std::move(lp));
        }
    }
    if (j.contains("roads")) {
        for (std::size_t i = 0; i < j["roads"].size(); ++i) {
            scene.roads.push_back(parse_ring(
                j["roads"][i], origin, origin + ": road[" + std::to_string(i) + "]"));
        }
    }
    return scene;
}

SceneData parse_scene(const std::string& path) {
    return parse_scene_text(read_file(path), path);
}

std::string serialize_scene(const SceneData& scene) {
    nlohmann::json j;
    j["buildings"] = nlohmann::json::array();
    for (const auto& b : scene.buildings) {
        j["buildings"].push_back({{"footprint", ring_to_json(b.footprint)},
                                  {"height_m", b.height_m},
                                  {"material", material_name(b.material)}});
    }
    j["landuse"] = nlohmann::json::array();
    for (const auto& l : scene.landuse) {
        j["landuse"].push_back(
            {{"polygon", ring_to_json(l.polygon)}, {"class", l.land_class}});
    }
    j["roads"] = nlohmann::json::array();
    for (const auto& r : scene.roads)
        j["roads"].push_back(ring_to_json(r));
    return j.dump(2);
}

}  // namespace rtwin
