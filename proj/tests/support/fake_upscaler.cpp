// Stand-in for an external upscaler: fake_upscaler MODE INPUT OUTPUT SCALE.
// ok: nearest-neighbour; wrong-size: one pixel short; fail: exit 3;
// sleep: hang; silent: exit 0 without output.
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>

#include "uab/imaging.hpp"

int main(int argc, char** argv) {
    if (argc != 5) {
        std::fprintf(stderr, "usage: fake_upscaler MODE INPUT OUTPUT SCALE\n");
        return 2;
    }
    const std::string mode = argv[1];
    const int scale = std::stoi(argv[4]);
    if (mode == "fail") {
        std::fprintf(stderr, "simulated failure\n");
        return 3;
    }
    if (mode == "sleep") {
        std::this_thread::sleep_for(std::chrono::seconds(30));
        return 0;
    }
    if (mode == "silent") {
        return 0;
    }
    const uab::ImageBuffer in = uab::decode(argv[2]);
    const int w = in.width() * scale - (mode == "wrong-size" ? 1 : 0);
    const int h = in.height() * scale;
    uab::ImageBuffer out(w, h, in.format());
    const int c = in.channels();
    auto dst = out.bytes();
    const auto src = in.bytes();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < c; ++k) {
                dst[(static_cast<std::size_t>(y) * w + x) * c + k] =
                    src[(static_cast<std::size_t>(y / scale) * in.width() + x / scale) * c + k];
            }
        }
    }
    uab::encode_png(out, argv[3]);
    return 0;
}
