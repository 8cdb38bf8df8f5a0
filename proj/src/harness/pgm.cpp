#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcdbn/io.hpp"

namespace fcdbn {

namespace {

struct Cursor {
    std::string_view bytes;
    std::size_t pos = 0;
    const std::string& name;

    [[noreturn]] void error(const std::string& what) const {
        fail(Errc::parse, name + ": " + what + " at byte offset " + std::to_string(pos));
    }

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            const auto c = static_cast<unsigned char>(bytes[pos]);
            if (std::isspace(c)) {
                ++pos;
            } else if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    std::size_t number(const char* field) {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
            error(std::string("expected ") + field);
        std::size_t v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (v > 1'000'000) error(std::string(field) + " is too large");
            ++pos;
        }
        return v;
    }
};

}  // namespace

Mat parse_pgm(std::string_view bytes, const std::string& name) {
    Cursor cur{bytes, 0, name};
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') cur.error("missing P5 magic number");
    cur.pos = 2;
    const std::size_t width = cur.number("width");
    const std::size_t height = cur.number("height");
    const std::size_t maxval = cur.number("maxval");
    if (width == 0 || height == 0) cur.error("zero image dimension");
    if (maxval == 0 || maxval > 255) cur.error("maxval must be in 1..255 for 8-bit images");
    if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos])))
        cur.error("expected a single whitespace byte after the header");
    ++cur.pos;
    const std::size_t need = width * height;
    if (bytes.size() - cur.pos < need) {
        cur.pos = bytes.size();
        cur.error("truncated payload: need " + std::to_string(need) + " pixel bytes");
    }
    Mat img(height, width);
    for (std::size_t i = 0; i < need; ++i) {
        const auto v = static_cast<unsigned char>(bytes[cur.pos + i]);
        if (v > maxval) {
            cur.pos += i;
            cur.error("pixel value exceeds maxval");
        }
        img.data()[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

Mat read_pgm(const std::string& path) { return parse_pgm(read_file(path), path); }

std::string encode_pgm(const Mat& image) {
    require(!image.empty(), Errc::shape, "cannot encode an empty image");
    std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
    out.reserve(out.size() + image.size());
    for (double x : image.flat()) {
        const double c = std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.0;
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    return out;
}

void write_pgm(const std::string& path, const Mat& image) { write_file_atomic(path, encode_pgm(image)); }

Mat load_image(const std::string& path) {
    Mat img = read_pgm(path);
    require(img.rows() == kFaceSide && img.cols() == kFaceSide, Errc::parse,
            path + ": expected a 64x64 image, got " + std::to_string(img.cols()) + "x" + std::to_string(img.rows()));
    return img;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), Errc::io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = fs::path(path + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), Errc::io, "cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        require(static_cast<bool>(out), Errc::io, "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(Errc::io, "cannot move output into '" + path + "'");
    }
}

void ArtifactSet::add(std::string path, std::string content) { items_.emplace_back(std::move(path), std::move(content)); }

void ArtifactSet::commit() {
    namespace fs = std::filesystem;
    std::vector<fs::path> staged;
    try {
        for (const auto& [path, content] : items_) {
            const fs::path target(path);
            if (target.has_parent_path()) fs::create_directories(target.parent_path());
            const fs::path tmp(path + ".tmp");
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            require(static_cast<bool>(out), Errc::io, "cannot write '" + tmp.string() + "'");
            staged.push_back(tmp);
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.close();
            require(static_cast<bool>(out), Errc::io, "short write to '" + tmp.string() + "'");
        }
    } catch (...) {
        std::error_code ec;
        for (const fs::path& p : staged) fs::remove(p, ec);
        throw;
    }
    for (std::size_t i = 0; i < items_.size(); ++i) fs::rename(staged[i], fs::path(items_[i].first));
    items_.clear();
}

std::string format_double(double x) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

}  // namespace fcdbn
