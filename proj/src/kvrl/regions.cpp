#include <algorithm>
#include <cmath>
#include <string>

#include "fcdbn/kvrl.hpp"

namespace fcdbn {

namespace {

std::size_t frac_index(double f, std::size_t n) {
    const auto v = static_cast<long>(std::lround(f * static_cast<double>(n)));
    return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n)));
}

// R x H matrix whose row r averages source cells [r*H/R, (r+1)*H/R).
Mat area_weights(std::size_t out, std::size_t in) {
    Mat w(out, in);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t r = 0; r < out; ++r) {
        const double lo = static_cast<double>(r) * scale;
        const double hi = lo + scale;
        for (auto i = static_cast<std::size_t>(lo); i < in && static_cast<double>(i) < hi; ++i) {
            const double overlap = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
            if (overlap > 0.0) w(r, i) = overlap / scale;
        }
    }
    return w;
}

Mat crop(const Mat& image, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    require(r1 > r0 && c1 > c0, Errc::invalid_parameter, "empty region");
    Mat out(r1 - r0, c1 - c0);
    for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) out(r - r0, c - c0) = image(r, c);
    return out;
}

double mean_of(const Mat& m) {
    double s = 0.0;
    for (double x : m.flat()) s += x;
    return s / static_cast<double>(m.size());
}

void check_range(double lo, double hi, const char* name) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && hi <= 1.0 && lo < hi, Errc::config,
            std::string("region fractions for ") + name + " must satisfy 0 <= lo < hi <= 1");
}

}  // namespace

const char* to_string(Region r) noexcept {
    switch (r) {
        case Region::face: return "face";
        case Region::t: return "t";
        case Region::not_t: return "not_t";
        case Region::binocular: return "binocular";
        case Region::chin: return "chin";
    }
    return "?";
}

Region region_from_string(const std::string& name) {
    for (Region r : {Region::face, Region::t, Region::not_t, Region::binocular, Region::chin})
        if (name == to_string(r)) return r;
    fail(Errc::config, "unknown region '" + name + "'");
}

void RegionFractions::validate() const {
    check_range(eye_top, eye_bottom, "the eye strip");
    check_range(nose_left, nose_right, "the nose columns");
    check_range(nose_top, nose_bottom, "the nose rows");
    check_range(binocular_top, binocular_bottom, "the binocular strip");
    check_range(chin_top, chin_bottom, "the chin rows");
    check_range(chin_left, chin_right, "the chin columns");
}

const Mat& RegionSet::get(Region r) const {
    switch (r) {
        case Region::face: return face;
        case Region::t: return t_region;
        case Region::not_t: return not_t;
        case Region::binocular:
            require(binocular.has_value(), Errc::shape, "binocular region was not extracted");
            return *binocular;
        case Region::chin:
            require(chin.has_value(), Errc::shape, "chin region was not extracted");
            return *chin;
    }
    fail(Errc::shape, "unknown region");
}

Mat t_mask(std::size_t rows, std::size_t cols, const RegionFractions& fr) {
    fr.validate();
    Mat m(rows, cols);
    const std::size_t e0 = frac_index(fr.eye_top, rows), e1 = frac_index(fr.eye_bottom, rows);
    const std::size_t n0 = frac_index(fr.nose_top, rows), n1 = frac_index(fr.nose_bottom, rows);
    const std::size_t c0 = frac_index(fr.nose_left, cols), c1 = frac_index(fr.nose_right, cols);
    for (std::size_t r = e0; r < e1; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = 1.0;
    for (std::size_t r = n0; r < n1; ++r)
        for (std::size_t c = c0; c < c1; ++c) m(r, c) = 1.0;
    return m;
}

Mat resize_area(const Mat& image, std::size_t rows, std::size_t cols) {
    require(!image.empty() && rows > 0 && cols > 0, Errc::shape, "resize of an empty image");
    if (image.rows() == rows && image.cols() == cols) return image;
    const Mat wr = area_weights(rows, image.rows());
    const Mat wc = area_weights(cols, image.cols());
    Mat tmp(rows, image.cols());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < image.rows(); ++i) {
            const double w = wr(r, i);
            if (w == 0.0) continue;
            for (std::size_t c = 0; c < image.cols(); ++c) tmp(r, c) += w * image(i, c);
        }
    Mat out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < image.cols(); ++j) s += wc(c, j) * tmp(r, j);
            out(r, c) = s;
        }
    return out;
}

Mat standardize(const Mat& image) {
    require(!image.empty(), Errc::shape, "cannot standardize an empty image");
    const double mean = mean_of(image);
    double var = 0.0;
    for (double x : image.flat()) var += (x - mean) * (x - mean);
    var /= static_cast<double>(image.size());
    Mat out(image.rows(), image.cols());
    if (var <= 1e-24) return out;
    const double inv = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < image.size(); ++i) out.data()[i] = (image.data()[i] - mean) * inv;
    return out;
}

Mat prepare_region(const Mat& image) { return standardize(resize_area(image, kRegionSide, kRegionSide)); }

RegionSet extract_regions(const Mat& aligned_face, const RegionFractions& fr, bool with_optional) {
    require(aligned_face.rows() == kFaceSide && aligned_face.cols() == kFaceSide, Errc::shape,
            "aligned face must be 64x64, got " + std::to_string(aligned_face.rows()) + "x" +
                std::to_string(aligned_face.cols()));
    require(aligned_face.all_finite(), Errc::invalid_parameter, "face contains non-finite pixels");
    fr.validate();
    const std::size_t n = kFaceSide;
    const double mean = mean_of(aligned_face);
    const Mat mask = t_mask(n, n, fr);

    Mat t_full = aligned_face;
    Mat not_t_full = aligned_face;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.data()[i] != 0.0)
            not_t_full.data()[i] = mean;
        else
            t_full.data()[i] = mean;
    }
    const std::size_t top = std::min(frac_index(fr.eye_top, n), frac_index(fr.nose_top, n));
    const std::size_t bottom = std::max(frac_index(fr.eye_bottom, n), frac_index(fr.nose_bottom, n));

    RegionSet out;
    out.face = prepare_region(aligned_face);
    out.t_region = prepare_region(crop(t_full, top, bottom, 0, n));
    out.not_t = prepare_region(not_t_full);
    if (with_optional) {
        out.binocular = prepare_region(
            crop(aligned_face, frac_index(fr.binocular_top, n), frac_index(fr.binocular_bottom, n), 0, n));
        out.chin = prepare_region(crop(aligned_face, frac_index(fr.chin_top, n), frac_index(fr.chin_bottom, n),
                                       frac_index(fr.chin_left, n), frac_index(fr.chin_right, n)));
    }
    return out;
}

}  // namespace fcdbn
