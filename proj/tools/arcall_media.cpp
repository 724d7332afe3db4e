// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "CLI11.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ARcall media utilities"};
  app.require_subcommand(1);

  std::string in_path, out_path;
  int level = 0;
  auto* blur = app.add_subcommand("blur", "Blur a binary PGM (P5) image");
  blur->add_option("input", in_path)->required()->check(CLI::ExistingFile);
  blur->add_option("output", out_path)->required();
  blur->add_option("--level", level, "Blur level 0..10")->check(CLI::Range(0, 10))->capture_default_str();

  std::string content;
  double x = 0.5, y = 0.5, fraction = 0.4;
  auto* mismatch = app.add_subcommand("mismatch", "Fraction of a content footprint outside the glasses view");
  mismatch->add_option("content", content)->required();
  mismatch->add_option("--x", x)->capture_default_str();
  mismatch->add_option("--y", y)->capture_default_str();
  mismatch->add_option("--glasses-fraction", fraction)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  if (*blur) {
    auto data = tools::slurp(in_path);
    if (!data) return std::cerr << "cannot read " << in_path << '\n', 1;
    std::uint8_t* out = nullptr;
    std::size_t len = 0;
    auto s = arcall_blur_pgm(reinterpret_cast<const std::uint8_t*>(data->data()), data->size(), level, &out, &len);
    if (s != ARCALL_OK) return tools::report(s, "blur");
    std::string bytes(reinterpret_cast<const char*>(out), len);
    arcall_free(out);
    if (!tools::spit(out_path, bytes)) return std::cerr << "cannot write " << out_path << '\n', 1;
    return 0;
  }
  double value = 0;
  if (auto s = arcall_view_mismatch(content.c_str(), x, y, fraction, &value); s != ARCALL_OK)
    return tools::report(s, "mismatch");
  std::cout << value << '\n';
  return 0;
}
