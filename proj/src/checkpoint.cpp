#include "saec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "saec/trainer.hpp"

namespace saec {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::size_t count(const Shape& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

TensorRecord record_of(std::string name, const Tensor& t) {
  return {std::move(name), t.shape(), std::vector<double>(t.data().begin(), t.data().end())};
}

// Parameter groups and their optimizer states, in file order.
template <typename T, typename Fn>
void for_each_group(T& trainer, Fn&& fn) {
  auto& a = trainer.agent;
  auto& o = trainer.optimizers;
  fn("actor", a.actor, &o.actor_dl, "actor_dl");
  fn("actor", a.actor, &o.actor_pi, "actor_pi");
  fn("executor", a.executor, &o.executor, "executor");
  fn("critic1", a.critic1, &o.critic1, "critic1");
  fn("critic2", a.critic2, &o.critic2, "critic2");
  fn("target1", a.target1, nullptr, "");
  fn("target2", a.target2, nullptr, "");
  fn("discriminator", a.discriminator, &o.discriminator, "discriminator");
  fn("temperature", trainer.alpha_params, &o.alpha, "alpha");
}

void add_stacked(std::vector<TensorRecord>& out, const std::string& name, const std::vector<Transition>& slots,
                 const Shape& inner, const Tensor Transition::*field) {
  Shape dims{slots.size()};
  dims.insert(dims.end(), inner.begin(), inner.end());
  TensorRecord r{name, dims, {}};
  r.data.reserve(count(dims));
  for (const auto& t : slots) r.data.insert(r.data.end(), (t.*field).data().begin(), (t.*field).data().end());
  out.push_back(std::move(r));
}

}  // namespace

std::string encode_checkpoint(const CheckpointFile& file) {
  std::string out(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, file.iteration);
  put_u64(out, file.records.size());
  for (const auto& r : file.records) {
    if (r.data.size() != count(r.dims)) throw CheckpointError("record " + r.name + " size mismatch");
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    put_u32(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) put_u64(out, d);
    for (double v : r.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

CheckpointFile decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.remaining() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic bytes)");
  }
  in.text(4);
  const auto version = in.uint(4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  CheckpointFile file;
  file.iteration = in.uint(8);
  const auto n = in.uint(8);
  for (std::uint64_t i = 0; i < n; ++i) {
    TensorRecord r;
    r.name = in.text(in.uint(4));
    const auto rank = in.uint(4);
    for (std::uint64_t k = 0; k < rank; ++k) r.dims.push_back(in.uint(8));
    const std::size_t values = count(r.dims);
    if (values > in.remaining() / 8) throw CheckpointError("truncated checkpoint");
    r.data.resize(values);
    for (auto& v : r.data) v = std::bit_cast<double>(in.uint(8));
    file.records.push_back(std::move(r));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after checkpoint records");
  return file;
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file) {
  const std::string bytes = encode_checkpoint(file);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place: " + ec.message());
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

CheckpointFile capture_trainer(const Trainer& trainer, bool include_replay) {
  CheckpointFile file;
  file.iteration = trainer.iteration();
  auto& out = file.records;
  for_each_group(trainer, [&](const std::string& group, const ParamSet& params, const OptimizerState*,
                              const std::string&) {
    if (group == "actor" && !out.empty()) return;  // actor listed twice for its two optimizers
    for (const auto& [name, t] : params) out.push_back(record_of(group + "/" + name, t));
  });
  for_each_group(trainer, [&](const std::string&, const ParamSet& params, const OptimizerState* opt,
                              const std::string& opt_name) {
    if (!opt) return;
    std::size_t k = 0;
    for (const auto& [name, t] : params) {
      out.push_back({"opt/" + opt_name + "/m/" + name, t.shape(), opt->first_moment[k]});
      out.push_back({"opt/" + opt_name + "/v/" + name, t.shape(), opt->second_moment[k]});
      ++k;
    }
    out.push_back({"opt/" + opt_name + "/step", {1}, {static_cast<double>(opt->step)}});
  });
  if (include_replay) {
    const ReplayBuffer& rb = trainer.replay;
    const auto& slots = rb.slots();
    const AgentConfig& a = trainer.config().agent;
    const Shape image{a.channels, a.height, a.width};
    out.push_back({"replay/state", {3},
                   {static_cast<double>(rb.capacity()), static_cast<double>(rb.cursor()),
                    static_cast<double>(rb.size())}});
    add_stacked(out, "replay/y", slots, image, &Transition::y);
    add_stacked(out, "replay/x", slots, image, &Transition::x);
    add_stacked(out, "replay/z", slots, {a.z_dim}, &Transition::z);
    add_stacked(out, "replay/x_next", slots, image, &Transition::x_next);
    add_stacked(out, "replay/mask", slots, {1, a.height, a.width}, &Transition::mask);
    TensorRecord reward{"replay/reward", {slots.size()}, {}};
    TensorRecord done{"replay/done", {slots.size()}, {}};
    for (const auto& t : slots) {
      reward.data.push_back(t.reward);
      done.data.push_back(t.done ? 1.0 : 0.0);
    }
    out.push_back(std::move(reward));
    out.push_back(std::move(done));
  }
  return file;
}

void restore_trainer(const CheckpointFile& file, Trainer& trainer) {
  const CheckpointFile expected = capture_trainer(trainer, false);
  const auto& got = file.records;
  const std::size_t fixed = expected.records.size();
  if (got.size() < fixed) throw CheckpointError("checkpoint has too few records for this configuration");
  for (std::size_t i = 0; i < fixed; ++i) {
    const auto& e = expected.records[i];
    if (got[i].name != e.name) {
      throw CheckpointError("record " + std::to_string(i) + " is '" + got[i].name + "', expected '" + e.name + "'");
    }
    if (got[i].dims != e.dims) {
      throw CheckpointError("record " + e.name + " has shape " + to_string(got[i].dims) + ", expected " +
                            to_string(e.dims));
    }
  }

  // Replay records, validated before any state is modified.
  std::vector<Transition> slots;
  std::size_t cursor = 0;
  const bool has_replay = got.size() > fixed;
  if (has_replay) {
    static const char* names[] = {"replay/state", "replay/y",    "replay/x",      "replay/z",
                                  "replay/x_next", "replay/mask", "replay/reward", "replay/done"};
    if (got.size() != fixed + 8) throw CheckpointError("unexpected number of replay records");
    for (std::size_t k = 0; k < 8; ++k) {
      if (got[fixed + k].name != names[k]) throw CheckpointError("unexpected record " + got[fixed + k].name);
    }
    const auto& st = got[fixed].data;
    if (st.size() != 3 || st[0] != static_cast<double>(trainer.replay.capacity())) {
      throw CheckpointError("replay capacity differs from configuration");
    }
    cursor = static_cast<std::size_t>(st[1]);
    const auto size = static_cast<std::size_t>(st[2]);
    const AgentConfig& a = trainer.config().agent;
    const Shape image{a.channels, a.height, a.width};
    auto check = [&](std::size_t k, const Shape& inner) {
      Shape dims{size};
      dims.insert(dims.end(), inner.begin(), inner.end());
      if (got[fixed + k].dims != dims) {
        throw CheckpointError("record " + got[fixed + k].name + " has shape " + to_string(got[fixed + k].dims) +
                              ", expected " + to_string(dims));
      }
    };
    check(1, image);
    check(2, image);
    check(3, {a.z_dim});
    check(4, image);
    check(5, {1, a.height, a.width});
    check(6, {});
    check(7, {});
    auto slice = [&](std::size_t k, std::size_t i, const Shape& inner) {
      const std::size_t n = count(inner);
      const auto& d = got[fixed + k].data;
      return Tensor::from(inner, std::vector<double>(d.begin() + static_cast<std::ptrdiff_t>(i * n),
                                                     d.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
    };
    for (std::size_t i = 0; i < size; ++i) {
      Transition t;
      t.y = slice(1, i, image);
      t.x = slice(2, i, image);
      t.z = slice(3, i, {a.z_dim});
      t.x_next = slice(4, i, image);
      t.mask = slice(5, i, {1, a.height, a.width});
      t.reward = got[fixed + 6].data[i];
      t.done = got[fixed + 7].data[i] != 0.0;
      slots.push_back(std::move(t));
    }
    // Throws before any state changes if inconsistent.
    ReplayBuffer probe(trainer.replay.capacity());
    probe.restore(slots, cursor);
  }

  std::size_t i = 0;
  for_each_group(trainer, [&](const std::string& group, ParamSet& params, OptimizerState*, const std::string&) {
    if (group == "actor" && i > 0) return;
    for (auto& [_, t] : params) {
      auto dst = t.mutable_data();
      std::copy(got[i].data.begin(), got[i].data.end(), dst.begin());
      ++i;
    }
  });
  for_each_group(trainer, [&](const std::string&, ParamSet& params, OptimizerState* opt, const std::string&) {
    if (!opt) return;
    for (std::size_t k = 0; k < params.size(); ++k) {
      opt->first_moment[k] = got[i++].data;
      opt->second_moment[k] = got[i++].data;
    }
    opt->step = static_cast<std::uint64_t>(got[i++].data[0]);
  });
  if (has_replay) trainer.replay.restore(std::move(slots), cursor);
  trainer.set_iteration(file.iteration);
}

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer, bool include_replay) {
  write_checkpoint_file(path, capture_trainer(trainer, include_replay));
}

void load_checkpoint(const std::filesystem::path& path, Trainer& trainer) {
  restore_trainer(read_checkpoint_file(path), trainer);
}

}  // namespace saec
