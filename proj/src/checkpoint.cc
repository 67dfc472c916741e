#include "rrcn/checkpoint.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rrcn {
namespace {

constexpr const char* kMagic = "rrcn-checkpoint";
constexpr int kVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void WriteTensor(std::ostream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << ' ' << t.rank();
  for (std::size_t d : t.shape()) out << ' ' << d;
  out << '\n';
  char buf[64];
  std::size_t col = 0;
  for (double v : t.values()) {
    std::snprintf(buf, sizeof buf, "%a", v);
    out << buf << (++col % 8 == 0 ? '\n' : ' ');
  }
  if (col % 8 != 0) out << '\n';
}

void Expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw FormatError("checkpoint: expected '" + word + "', got '" + got + "'");
}

std::pair<std::string, Tensor> ReadTensor(std::istream& in) {
  Expect(in, "tensor");
  std::string name;
  std::size_t rank = 0;
  if (!(in >> name >> rank)) throw FormatError("checkpoint: bad tensor header");
  Shape shape(rank);
  for (auto& d : shape)
    if (!(in >> d)) throw FormatError("checkpoint: bad shape for " + name);
  Tensor t(shape);
  std::string token;
  for (double& v : t.values()) {
    if (!(in >> token)) throw FormatError("checkpoint: truncated values for " + name);
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw FormatError("checkpoint: bad value '" + token + "' in " + name);
  }
  return {name, std::move(t)};
}

}  // namespace

void WriteCheckpoint(std::ostream& out, const RRCNModel& model) {
  out << kMagic << ' ' << kVersion << '\n';
  const std::string cfg = FormatConfig(model.config);
  std::size_t lines = 0;
  for (char c : cfg) lines += c == '\n';
  out << "config " << lines << '\n' << cfg;
  out << "attributes " << model.attribute_names.size() << '\n';
  for (std::size_t i = 0; i < model.attribute_names.size(); ++i)
    out << model.attribute_names[i] << ' ' << model.embedding.vocab_sizes[i] << '\n';

  const auto params = model.NamedParameters();
  out << "tensors " << params.size() + 4 * model.policies.size() << '\n';
  for (const auto& [name, t] : params) WriteTensor(out, name, *t);
  for (const PolicyParams& p : model.policies) {
    const std::string prefix = "policy" + std::to_string(p.k) + ".";
    WriteTensor(out, prefix + "w1", p.w1);
    WriteTensor(out, prefix + "b1", p.b1);
    WriteTensor(out, prefix + "w2", p.w2);
    WriteTensor(out, prefix + "baseline", Tensor::Scalar(p.baseline));
  }
}

RRCNModel ReadCheckpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw FormatError("checkpoint: not an rrcn checkpoint");
  if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Expect(in, "config");
  std::size_t lines = 0;
  in >> lines;
  std::string line;
  std::getline(in, line);
  std::ostringstream cfg_text;
  for (std::size_t i = 0; i < lines; ++i) {
    if (!std::getline(in, line)) throw FormatError("checkpoint: truncated config block");
    cfg_text << line << '\n';
  }
  std::istringstream cfg_in(cfg_text.str());
  const ModelConfig config = ParseConfig(cfg_in);

  Expect(in, "attributes");
  std::size_t n = 0;
  in >> n;
  std::vector<std::string> names(n);
  std::vector<int> vocab(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> names[i] >> vocab[i])) throw FormatError("checkpoint: bad attribute line");

  // Init builds the right structure; every tensor is then overwritten.
  RRCNModel model = RRCNModel::Init(config, names, vocab);
  std::map<std::string, Tensor*> slots;
  for (auto& [name, t] : model.NamedParameters()) slots[name] = t;
  std::map<std::string, double*> baselines;
  for (PolicyParams& p : model.policies) {
    const std::string prefix = "policy" + std::to_string(p.k) + ".";
    slots[prefix + "w1"] = &p.w1;
    slots[prefix + "b1"] = &p.b1;
    slots[prefix + "w2"] = &p.w2;
    baselines[prefix + "baseline"] = &p.baseline;
  }

  Expect(in, "tensors");
  std::size_t count = 0;
  in >> count;
  if (count != slots.size() + baselines.size()) {
    throw FormatError("checkpoint: expected " + std::to_string(slots.size() + baselines.size()) + " tensors, found " +
                      std::to_string(count));
  }
  for (std::size_t i = 0; i < count; ++i) {
    auto [name, t] = ReadTensor(in);
    if (auto it = slots.find(name); it != slots.end()) {
      if (it->second->shape() != t.shape()) {
        throw FormatError("checkpoint: tensor " + name + " has shape " + ShapeString(t.shape()) + ", expected " +
                          ShapeString(it->second->shape()));
      }
      *it->second = std::move(t);
    } else if (auto bt = baselines.find(name); bt != baselines.end()) {
      *bt->second = t.item();
    } else {
      throw FormatError("checkpoint: unexpected tensor " + name);
    }
  }
  return model;
}

void SaveCheckpoint(const RRCNModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  WriteCheckpoint(out, model);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

RRCNModel LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ReadCheckpoint(in);
}

}  // namespace rrcn
