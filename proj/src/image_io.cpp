#include "densedino/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace densedino {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

void read_pnm_header(std::istream& in, const std::string& magic, Index& w, Index& h) {
  std::string tag;
  in >> tag;
  if (tag != magic) throw std::runtime_error("bad PNM magic, expected " + magic);
  int maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("bad PNM header");
  in.get();  // single whitespace before raster
}

}  // namespace

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const Index h = image.height(), w = image.width();
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j)
      for (int ch = 0; ch < 3; ++ch)
        row[static_cast<std::size_t>(j) * 3 + static_cast<std::size_t>(ch)] =
            to_byte(image.c[static_cast<std::size_t>(ch)](i, j));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Index w = 0, h = 0;
  read_pnm_header(in, "P6", w, h);
  Image image(h, w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (Index i = 0; i < h; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated PPM " + path);
    for (Index j = 0; j < w; ++j)
      for (int ch = 0; ch < 3; ++ch)
        image.c[static_cast<std::size_t>(ch)](i, j) =
            row[static_cast<std::size_t>(j) * 3 + static_cast<std::size_t>(ch)] / 255.0;
  }
  return image;
}

void write_pgm(const std::string& path, const MatI& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const Index h = values.rows(), w = values.cols();
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w));
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const int v = values(i, j);
      row[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

MatI read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Index w = 0, h = 0;
  read_pnm_header(in, "P5", w, h);
  MatI values(h, w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w));
  for (Index i = 0; i < h; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated PGM " + path);
    for (Index j = 0; j < w; ++j) values(i, j) = row[static_cast<std::size_t>(j)];
  }
  return values;
}

void dump_split(const std::string& dir, const SceneConfig& cfg, std::uint64_t root_seed,
                std::uint64_t stream_tag, int count) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir + "/index.tsv");
  if (!index) throw std::runtime_error("cannot open " + dir + "/index.tsv");
  index << "id\tseed\tclasses\n";
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = mix_seed(root_seed, {stream_tag, static_cast<std::uint64_t>(i)});
    Rng rng(seed);
    const Scene scene = generate_scene(rng, cfg);
    std::ostringstream id;
    id.width(6);
    id.fill('0');
    id << i;
    write_ppm(dir + "/" + id.str() + ".ppm", scene.image);
    write_pgm(dir + "/" + id.str() + ".pgm", scene.mask);
    index << id.str() << "\t" << seed << "\t";
    bool first = true;
    for (int c : scene.classes) {
      if (!first) index << ",";
      index << c;
      first = false;
    }
    index << "\n";
  }
}

}  // namespace densedino
