#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "support/synthetic.hpp"
#include "uab/error.hpp"
#include "uab/features.hpp"

namespace uab {
namespace {

using testing::constant_luma;
using testing::random_luma;
using testing::stripes_luma;

// Population std of the Sobel magnitude using explicit 3x3 kernels.
double si_oracle(const ImageBuffer& img) {
    static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static constexpr int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    std::vector<long double> mags;
    for (int y = 1; y < img.height() - 1; ++y) {
        for (int x = 1; x < img.width() - 1; ++x) {
            long double gx = 0, gy = 0;
            for (int j = 0; j < 3; ++j) {
                for (int i = 0; i < 3; ++i) {
                    gx += kx[j][i] * static_cast<long double>(img.at(x + i - 1, y + j - 1));
                    gy += ky[j][i] * static_cast<long double>(img.at(x + i - 1, y + j - 1));
                }
            }
            mags.push_back(std::sqrt(gx * gx + gy * gy));
        }
    }
    long double mean = 0;
    for (auto m : mags) mean += m;
    mean /= mags.size();
    long double var = 0;
    for (auto m : mags) var += (m - mean) * (m - mean);
    return static_cast<double>(std::sqrt(var / mags.size()));
}

TEST(SpatialInformation, ConstantIsZero) {
    EXPECT_DOUBLE_EQ(spatial_information(constant_luma(20, 20, 77.0f)), 0.0);
}

TEST(SpatialInformation, VerticalStepEdge) {
    // 8x8, columns 0..3 black, 4..7 white: 12 of 36 interior magnitudes are
    // 1020, the rest 0, so SI = sqrt(231200).
    const auto img = stripes_luma(8, 8, 4);
    EXPECT_NEAR(spatial_information(img), std::sqrt(231200.0), 1e-9);
    EXPECT_NEAR(spatial_information(img), si_oracle(img), 1e-9);
}

TEST(SpatialInformation, RandomImagesMatchOracle) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto img = random_luma(17 + static_cast<int>(seed) * 5, 13 + static_cast<int>(seed) * 3, seed);
        const double expected = si_oracle(img);
        EXPECT_NEAR(spatial_information(img), expected, 1e-9 * expected);
    }
}

TEST(SpatialInformation, TooSmall) {
    EXPECT_THROW((void)spatial_information(constant_luma(2, 10, 1.0f)), TooSmall);
}

TEST(Colorfulness, GrayAndPureRed) {
    EXPECT_DOUBLE_EQ(colorfulness(testing::constant_rgb(9, 9, 90, 90, 90)), 0.0);
    EXPECT_NEAR(colorfulness(testing::constant_rgb(9, 9, 255, 0, 0)), 0.3 * std::hypot(255.0, 127.5), 1e-9);
    EXPECT_NEAR(colorfulness(testing::constant_rgb(9, 9, 255, 0, 0)), 85.53, 0.01);
}

TEST(Colorfulness, RandomMatchesDirectStatistics) {
    const auto img = testing::random_rgb(23, 19, 4);
    long double s_rg = 0, s_yb = 0, ss_rg = 0, ss_yb = 0;
    const std::size_t n = 23 * 19;
    for (int y = 0; y < 19; ++y) {
        for (int x = 0; x < 23; ++x) {
            const long double rg = img.at(x, y, 0) - img.at(x, y, 1);
            const long double yb = 0.5L * (img.at(x, y, 0) + img.at(x, y, 1)) - img.at(x, y, 2);
            s_rg += rg;
            s_yb += yb;
            ss_rg += rg * rg;
            ss_yb += yb * yb;
        }
    }
    const long double m_rg = s_rg / n, m_yb = s_yb / n;
    const long double v = (ss_rg / n - m_rg * m_rg) + (ss_yb / n - m_yb * m_yb);
    const double expected = static_cast<double>(std::sqrt(v) + 0.3L * std::sqrt(m_rg * m_rg + m_yb * m_yb));
    EXPECT_NEAR(colorfulness(img), expected, 1e-9);
}

TEST(Cpbd, NoEdgesGivesZeroWithDiagnostic) {
    const auto r = cpbd_detailed(constant_luma(128, 128, 100.0f));
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.no_edges);
    EXPECT_TRUE(cpbd_detailed(constant_luma(40, 40, 1.0f)).no_edges);
}

TEST(Cpbd, IdealStepEdgesAreFullySharp) {
    // Width 1 at contrast 255: P_blur = 1 - exp(-(1/3)^3.6) ~ 0.019 <= 0.63.
    EXPECT_NEAR(1.0 - std::exp(-std::pow(1.0 / 3.0, 3.6)), 0.019, 0.0005);
    const auto r = cpbd_detailed(stripes_luma(256, 256, 32));
    EXPECT_FALSE(r.no_edges);
    EXPECT_GT(r.edge_pixels, 0u);
    EXPECT_DOUBLE_EQ(r.value, 1.0);
}

TEST(Cpbd, BlurLowersScore) {
    const auto sharp = stripes_luma(256, 256, 32);
    const auto blurred = testing::gaussian_blur_naive(sharp, 4.0);
    EXPECT_LT(cpbd(blurred), cpbd(sharp));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto tex = testing::texture_luma(192, 192, seed, 1.0);
        const double v = cpbd(tex);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_LE(cpbd(testing::gaussian_blur_naive(tex, 3.0)), v);
    }
}

// Mean length of maximal strictly monotone runs in a 1-D profile: the
// distance between the extrema that bracket each transition.
double mean_transition_width(const std::vector<double>& profile) {
    double total = 0;
    int count = 0;
    std::size_t i = 0;
    while (i + 1 < profile.size()) {
        if (profile[i + 1] == profile[i]) {
            ++i;
            continue;
        }
        const bool rising = profile[i + 1] > profile[i];
        std::size_t j = i;
        while (j + 1 < profile.size() && (rising ? profile[j + 1] > profile[j] : profile[j + 1] < profile[j])) {
            ++j;
        }
        total += static_cast<double>(j - i);
        ++count;
        i = j;
    }
    return count ? total / count : 0.0;
}

TEST(BlurStrength, IdealStepsAndNoEdges) {
    EXPECT_DOUBLE_EQ(blur_strength(stripes_luma(128, 64, 16)), 1.0);
    EXPECT_DOUBLE_EQ(blur_strength(constant_luma(32, 32, 5.0f)), 0.0);
    EXPECT_THROW((void)blur_strength(constant_luma(2, 2, 5.0f)), TooSmall);
}

TEST(BlurStrength, GaussianBlurredStepsMatchProfileMeasurement) {
    const auto blurred = testing::gaussian_blur_naive(stripes_luma(256, 64, 32), 2.0);
    std::vector<double> row;
    for (int x = 0; x < 256; ++x) {
        row.push_back(blurred.at(x, 32));
    }
    const double expected = mean_transition_width(row);
    EXPECT_DOUBLE_EQ(expected, 13.0);  // radius ceil(3*2)=6 on both sides of the step
    EXPECT_DOUBLE_EQ(blur_strength(blurred), expected);
}

TEST(Blur, RangeConstantAndMonotonicity) {
    EXPECT_DOUBLE_EQ(blur(constant_luma(30, 30, 9.0f)), 0.0);
    EXPECT_THROW((void)blur(constant_luma(8, 30, 9.0f)), TooSmall);
    std::vector<ImageBuffer> corpus = {stripes_luma(96, 96, 7), random_luma(96, 96, 1)};
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        corpus.push_back(testing::texture_luma(96, 96, seed + 10, 1.0 + static_cast<double>(seed)));
    }
    for (const auto& img : corpus) {
        const double b0 = blur(img);
        EXPECT_GE(b0, 0.0);
        EXPECT_LE(b0, 1.0);
        EXPECT_GT(blur(testing::gaussian_blur_naive(img, 3.0)), b0);
    }
}

// Direct O(N^2 M^2) DFT of the mean-removed image and the same band ratio.
double fft_oracle(const ImageBuffer& img) {
    const int w = img.width(), h = img.height();
    double mean = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mean += img.at(x, y);
    mean /= w * h;
    double all = 0, high = 0;
    int n_high = 0;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            std::complex<double> acc = 0;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double phase = -2.0 * std::numbers::pi * (static_cast<double>(u) * x / w + static_cast<double>(v) * y / h);
                    acc += (img.at(x, y) - mean) * std::polar(1.0, phase);
                }
            }
            const double m = std::log(1.0 + std::abs(acc));
            // Centered coordinates: index k maps to k or k - n.
            const double fu = (u <= w / 2 ? u : u - w) / (w / 2.0);
            const double fv = (v <= h / 2 ? v : v - h) / (h / 2.0);
            all += m;
            if (std::sqrt(fu * fu + fv * fv) > 0.5) {
                high += m;
                ++n_high;
            }
        }
    }
    return (high / n_high) / (all / (w * h));
}

TEST(FftFeature, ConstantIsZero) {
    EXPECT_DOUBLE_EQ(fft_feature(constant_luma(64, 48, 200.0f)), 0.0);
    EXPECT_THROW((void)fft_feature(constant_luma(31, 64, 1.0f)), TooSmall);
}

TEST(FftFeature, MatchesDirectDft) {
    const auto img = random_luma(32, 34, 5);
    EXPECT_NEAR(fft_feature(img), fft_oracle(img), 1e-9);
    const auto tex = testing::texture_luma(33, 32, 6, 1.5);
    EXPECT_NEAR(fft_feature(tex), fft_oracle(tex), 1e-9);
}

TEST(FftFeature, WhiteNoiseNearOneAndLowPassLower) {
    const auto noise_img = random_luma(256, 256, 42);
    EXPECT_NEAR(fft_feature(noise_img), 1.0, 0.05);
    const auto smooth = testing::gaussian_blur_naive(noise_img, 1.5);
    EXPECT_LT(fft_feature(smooth), fft_feature(noise_img));
}

TEST(Noise, ConstantAndGaussianEstimate) {
    EXPECT_DOUBLE_EQ(noise(constant_luma(40, 40, 128.0f)), 0.0);
    EXPECT_THROW((void)noise(constant_luma(8, 40, 128.0f)), TooSmall);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 10.0);
    std::vector<float> px(256 * 256);
    for (auto& p : px) {
        p = static_cast<float>(128.0 + gauss(rng));
    }
    const auto img = ImageBuffer::from_floats(256, 256, px);

    // Residual of white noise after subtracting the separable Gaussian
    // smoothing: var = sigma^2 (1 - 2 h0 + sum h^2) with h = g (x) g.
    const auto g = testing::gaussian_taps(1.5);
    const double g0 = g[g.size() / 2];
    double g2 = 0;
    for (double t : g) g2 += t * t;
    const double attenuation = std::sqrt(1.0 - 2.0 * g0 * g0 + g2 * g2);
    const double expected = 10.0 * attenuation;
    EXPECT_NEAR(noise(img), expected, 0.15 * expected);
}

TEST(Noise, OffsetInvariant) {
    std::mt19937 rng(2);
    std::vector<float> a(64 * 64);
    std::vector<float> b(64 * 64);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<float>(rng() % 200);
        b[i] = a[i] + 37.0f;
    }
    EXPECT_NEAR(noise(ImageBuffer::from_floats(64, 64, a)), noise(ImageBuffer::from_floats(64, 64, b)), 1e-9);
}

TEST(Features, RotationBy180Invariance) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto img = testing::texture_luma(70, 50, seed, 1.2);
        const auto rot = testing::rotate180(img);
        EXPECT_NEAR(spatial_information(rot), spatial_information(img), 1e-9);
        EXPECT_NEAR(fft_feature(rot), fft_feature(img), 1e-9);
        EXPECT_NEAR(noise(rot), noise(img), 1e-9);
    }
}

TEST(BasicStats, Examples) {
    const auto gray = basic_stats(testing::constant_rgb(10, 10, 128, 128, 128));
    EXPECT_DOUBLE_EQ(gray.contrast, 0.0);
    EXPECT_DOUBLE_EQ(gray.saturation, 0.0);
    EXPECT_NEAR(gray.tone, 0.502, 0.0005);
    EXPECT_DOUBLE_EQ(basic_stats(testing::constant_rgb(3, 3, 255, 0, 0)).saturation, 1.0);
}

TEST(BasicStats, RandomMatchesNaiveOracle) {
    const auto img = testing::random_rgb(21, 11, 8);
    long double sl = 0, sll = 0, ss = 0;
    const int n = 21 * 11;
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 21; ++x) {
            const long double r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
            const long double l = 0.299L * r + 0.587L * g + 0.114L * b;
            sl += l;
            sll += l * l;
            const long double mx = std::max({r, g, b}), mn = std::min({r, g, b});
            ss += mx == 0 ? 0 : (mx - mn) / mx;
        }
    }
    const auto s = basic_stats(img);
    EXPECT_NEAR(s.tone, static_cast<double>(sl / n / 255), 1e-9);
    EXPECT_NEAR(s.contrast, static_cast<double>(std::sqrt(sll / n - (sl / n) * (sl / n)) / 255), 1e-9);
    EXPECT_NEAR(s.saturation, static_cast<double>(ss / n), 1e-9);
}

TEST(ExtractFeatures, ConstantImageGivesDegenerateValues) {
    const auto fv = extract_features(testing::constant_rgb(128, 96, 60, 60, 60), "c");
    EXPECT_EQ(fv.stimulus_id, "c");
    for (const auto& v : fv.values()) {
        ASSERT_TRUE(v.has_value());
    }
    EXPECT_EQ(*fv.cpbd, 0.0);
    EXPECT_EQ(*fv.si, 0.0);
    EXPECT_EQ(*fv.fft, 0.0);
    EXPECT_EQ(*fv.noise, 0.0);
    EXPECT_EQ(*fv.blur, 0.0);
    EXPECT_EQ(*fv.blur_strength, 0.0);
    EXPECT_EQ(*fv.saturation, 0.0);
    EXPECT_EQ(*fv.colorfulness, 0.0);
    EXPECT_EQ(*fv.contrast, 0.0);
    EXPECT_NEAR(*fv.tone, 60.0 / 255.0, 1e-6);
}

TEST(ExtractFeatures, DeterministicAndBounded) {
    const auto img = testing::random_rgb(160, 120, 3);
    const auto a = extract_features(img, "x");
    const auto b = extract_features(img, "x");
    EXPECT_EQ(a.values(), b.values());
    EXPECT_GE(*a.cpbd, 0.0);
    EXPECT_LE(*a.cpbd, 1.0);
    EXPECT_GE(*a.blur, 0.0);
    EXPECT_LE(*a.blur, 1.0);
    EXPECT_GE(*a.si, 0.0);
    for (double v : {*a.saturation, *a.tone, *a.contrast}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(ExtractFeatures, SmallImageYieldsNullsWithDiagnostics) {
    const auto fv = extract_features(testing::random_rgb(6, 6, 1), "tiny");
    EXPECT_TRUE(fv.si.has_value());
    EXPECT_FALSE(fv.fft.has_value());
    EXPECT_FALSE(fv.noise.has_value());
    EXPECT_FALSE(fv.blur.has_value());
    EXPECT_GE(fv.diagnostics.size(), 3u);
}

TEST(Features, LowPassRoundTripNeverRaisesSi) {
    std::vector<ImageBuffer> corpus;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        corpus.push_back(testing::random_rgb(120, 80, seed));
    }
    for (const auto& rgb : corpus) {
        const double before = spatial_information(to_luma(rgb));
        for (int factor : {2, 4}) {
            const auto small = resize_lanczos(rgb, rgb.width() / factor, rgb.height() / factor);
            const auto back = resize_lanczos(small, rgb.width(), rgb.height());
            EXPECT_LE(spatial_information(to_luma(back)), before * 1.01);
        }
    }
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto tex = testing::texture_luma(128, 96, seed + 30, 1.0);
        const double before = spatial_information(tex);
        const auto back = resize_lanczos(resize_lanczos(tex, 64, 48), 128, 96);
        EXPECT_LE(spatial_information(back), before * 1.01);
    }
}

TEST(FeatureTable, CsvRoundTripKeepsMissingValues) {
    FeatureVector a;
    a.stimulus_id = "img_lanczos_x2";
    a.cpbd = 0.5;
    a.si = 12.25;
    a.tone = 0.1;
    FeatureVector b;
    b.stimulus_id = "img,quoted";
    b.noise = 1e-9;
    const std::vector<FeatureVector> rows = {a, b};
    const std::string csv = features_to_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "stimulus_id,cpbd,si,fft,noise,blur,blur_strength,saturation,colorfulness,contrast,tone");
    const auto back = features_from_csv(csv);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].stimulus_id, a.stimulus_id);
    EXPECT_EQ(back[0].values(), a.values());
    EXPECT_EQ(back[1].stimulus_id, b.stimulus_id);
    EXPECT_EQ(back[1].values(), b.values());
    EXPECT_EQ(features_to_csv(back), csv);
}

TEST(FeatureTable, RejectsBadValuesAndMissingColumns) {
    EXPECT_THROW((void)features_from_csv("stimulus_id,cpbd\ns,1\n"), ParseError);
    const std::string header = "stimulus_id,cpbd,si,fft,noise,blur,blur_strength,saturation,colorfulness,contrast,tone\n";
    EXPECT_THROW((void)features_from_csv(header + "s,x,,,,,,,,,\n"), ParseError);
    EXPECT_EQ(features_from_csv(header + "s,,,,,,,,,,\n").size(), 1u);
}

}  // namespace
}  // namespace uab
