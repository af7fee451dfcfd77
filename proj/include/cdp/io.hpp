#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdp/channel.hpp"
#include "cdp/codebook.hpp"
#include "cdp/error.hpp"
#include "cdp/hash.hpp"
#include "cdp/matrix.hpp"
#include "cdp/printed_image.hpp"
#include "cdp/template_gen.hpp"

namespace cdp::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, std::string_view bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + p.string() + "'");
}

inline std::string file_hash(const fs::path& p) { return hex64(fnv1a64(read_file(p))); }

// ----------------------------------------------------------------- PGM (P5)

inline std::string encode_pgm(const Matrix<std::uint8_t>& gray) {
    std::string out = "P5\n" + std::to_string(gray.cols()) + " " + std::to_string(gray.rows()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(gray.values().data()), gray.size());
    return out;
}

inline Matrix<std::uint8_t> decode_pgm(std::string_view bytes) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&] {
        skip_ws();
        std::size_t v = 0, digits = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
            ++digits;
        }
        if (!digits) throw IoError("pgm: malformed header");
        return v;
    };
    if (bytes.substr(0, 2) != "P5") throw IoError("pgm: not a binary (P5) graymap");
    pos = 2;
    const std::size_t w = read_uint(), h = read_uint(), maxval = read_uint();
    if (maxval != 255) throw IoError("pgm: only 8-bit images are supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) throw IoError("pgm: malformed header");
    ++pos;
    if (bytes.size() - pos < w * h) throw IoError("pgm: truncated pixel data");
    Matrix<std::uint8_t> out(h, w);
    std::copy_n(bytes.data() + pos, w * h, reinterpret_cast<char*>(out.values().data()));
    return out;
}

/// Template pixels: 0 = black symbol (1), 255 = white (0).
inline Matrix<std::uint8_t> template_to_gray(const BitMatrix& bits) {
    Matrix<std::uint8_t> g(bits.rows(), bits.cols());
    for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = bits.values()[i] ? 0 : 255;
    return g;
}

inline BitMatrix gray_to_template(const Matrix<std::uint8_t>& g) {
    BitMatrix bits(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) bits.values()[i] = g.values()[i] < 128 ? 1 : 0;
    return bits;
}

inline Matrix<std::uint8_t> image_to_gray(const ImageMatrix& img) {
    Matrix<std::uint8_t> g(img.rows(), img.cols());
    for (std::size_t i = 0; i < g.size(); ++i)
        g.values()[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.values()[i], 0.0, 1.0) * 255.0));
    return g;
}

inline ImageMatrix gray_to_image(const Matrix<std::uint8_t>& g) {
    ImageMatrix img(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) img.values()[i] = g.values()[i] / 255.0;
    return img;
}

inline fs::path sidecar_path(const fs::path& pgm) { return fs::path(pgm).replace_extension(".json"); }

inline void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

inline json read_json(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in '" + p.string() + "': " + e.what());
    }
}

inline void save_template(const fs::path& pgm, const Template& t) {
    write_file(pgm, encode_pgm(template_to_gray(t.symbols)));
    write_json(sidecar_path(pgm), json{{"L", t.symbols.rows()}, {"p", t.density}, {"seed", t.seed}});
}

inline Template load_template(const fs::path& pgm) {
    Template t{gray_to_template(decode_pgm(read_file(pgm))), 0.5, 0};
    if (t.symbols.rows() != t.symbols.cols()) throw IoError("template '" + pgm.string() + "' is not square");
    if (const auto side = sidecar_path(pgm); fs::exists(side)) {
        const json j = read_json(side);
        t.density = j.value("p", 0.5);
        t.seed = j.value("seed", std::uint64_t{0});
    }
    return t;
}

inline json channel_to_json(const ChannelParams& c) {
    return {{"k", c.k},
            {"blur_sigma", c.blur_sigma},
            {"dot_gain_gamma", c.dot_gain_gamma},
            {"noise_sigma", c.noise_sigma},
            {"seed", c.seed},
            {"hash", c.hash()}};
}

inline ChannelParams channel_from_json(const json& j) {
    ChannelParams c;
    c.k = j.at("k").get<int>();
    c.blur_sigma = j.at("blur_sigma").get<double>();
    c.dot_gain_gamma = j.at("dot_gain_gamma").get<double>();
    c.noise_sigma = j.at("noise_sigma").get<double>();
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
}

/// Printed image plus sidecar {k, source_id, channel, lineage}.
inline void save_printed(const fs::path& pgm, const PrintedImage& img, const json& extra = json::object()) {
    write_file(pgm, encode_pgm(image_to_gray(img.pixels)));
    json j{{"k", img.k}, {"source_id", img.source_id}};
    j.update(extra);
    write_json(sidecar_path(pgm), j);
}

inline PrintedImage load_printed(const fs::path& pgm, int k_override = 0) {
    PrintedImage img{gray_to_image(decode_pgm(read_file(pgm))), k_override > 0 ? k_override : 1, {}};
    if (const auto side = sidecar_path(pgm); fs::exists(side)) {
        const json j = read_json(side);
        if (k_override <= 0) img.k = j.value("k", 1);
        img.source_id = j.value("source_id", std::string{});
    }
    if (img.pixels.rows() % static_cast<std::size_t>(img.k) || img.pixels.cols() % static_cast<std::size_t>(img.k))
        throw DimensionError("image '" + pgm.string() + "' is not a multiple of k=" + std::to_string(img.k));
    return img;
}

/// Sorted *.pgm files of a directory.
inline std::vector<fs::path> list_pgm(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// ------------------------------------------------------------- codebook JSON

inline constexpr int kCodebookVersion = 1;

inline json codebook_to_json(const Codebook& cb) {
    const auto& c = cb.config();
    json entries = json::array();
    for (const auto& [code, e] : cb.entries())
        entries.push_back({{"omega", code}, {"count", e.count}, {"p_sum", e.p_sum}, {"pb_sum", e.pb_sum}});
    const auto& g = cb.global();
    return {{"version", kCodebookVersion},
            {"h", c.h},
            {"k", c.k},
            {"estimator_id", c.estimator_id},
            {"border_mode", std::string(to_string(c.border))},
            {"epsilon", c.epsilon},
            {"lineage", c.lineage},
            {"global", {{"count", g.count}, {"P", g.p()}, {"P_b", g.pb()}, {"p_sum", g.p_sum}, {"pb_sum", g.pb_sum}}},
            {"entries", entries}};
}

inline Codebook codebook_from_json(const json& j) {
    try {
        if (j.at("version").get<int>() != kCodebookVersion) throw IoError("codebook: unsupported version");
        CodebookConfig c;
        c.h = j.at("h").get<int>();
        c.k = j.at("k").get<int>();
        c.estimator_id = j.at("estimator_id").get<std::string>();
        c.border = parse_border_mode(j.at("border_mode").get<std::string>());
        c.epsilon = j.at("epsilon").get<double>();
        c.lineage = j.value("lineage", std::string{});
        Codebook cb(c);
        for (const auto& e : j.at("entries"))
            cb.add_entry(e.at("omega").get<std::uint64_t>(),
                         {e.at("count").get<std::uint64_t>(), e.at("p_sum").get<std::uint64_t>(),
                          e.at("pb_sum").get<std::uint64_t>()});
        return cb;
    } catch (const json::exception& e) {
        throw IoError(std::string("codebook: malformed document: ") + e.what());
    }
}

inline void save_codebook(const fs::path& p, const Codebook& cb) { write_json(p, codebook_to_json(cb)); }
inline Codebook load_codebook(const fs::path& p) { return codebook_from_json(read_json(p)); }

// ----------------------------------------------------------------------- CSV

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace cdp::io
