#include "synct/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace synct {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'Y', 'N', 'C', 'T', 'C', 'P', '1'};

json::binary_t tensor_bytes(const Tensor& t) {
  std::vector<std::uint8_t> buf(t.size() * sizeof(double));
  std::memcpy(buf.data(), t.data(), buf.size());
  return json::binary_t(std::move(buf));
}

void fill_tensor(Tensor& t, const json::binary_t& bin) {
  if (bin.size() != t.size() * sizeof(double))
    throw std::runtime_error("checkpoint: tensor byte-size mismatch");
  std::memcpy(t.data(), bin.data(), bin.size());
}

json::binary_t doubles_bytes(const std::vector<double>& v) {
  std::vector<std::uint8_t> buf(v.size() * sizeof(double));
  std::memcpy(buf.data(), v.data(), buf.size());
  return json::binary_t(std::move(buf));
}

std::vector<double> bytes_doubles(const json::binary_t& bin) {
  std::vector<double> v(bin.size() / sizeof(double));
  std::memcpy(v.data(), bin.data(), bin.size());
  return v;
}

json adam_json(const Adam& opt) {
  json m = json::array(), v = json::array();
  for (const auto& t : opt.m()) m.push_back(tensor_bytes(t));
  for (const auto& t : opt.v()) v.push_back(tensor_bytes(t));
  return json{{"t", opt.steps()}, {"m", std::move(m)}, {"v", std::move(v)}};
}

void adam_restore(Adam& opt, const json& j, const std::vector<ad::Param*>& params) {
  const auto& jm = j.at("m");
  const auto& jv = j.at("v");
  if (jm.size() != params.size() || jv.size() != params.size())
    throw std::runtime_error("checkpoint: optimizer state count mismatch");
  std::vector<Tensor> m, v;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor tm(params[i]->v.c(), params[i]->v.h(), params[i]->v.w());
    Tensor tv(params[i]->v.c(), params[i]->v.h(), params[i]->v.w());
    fill_tensor(tm, jm[i].get_binary());
    fill_tensor(tv, jv[i].get_binary());
    m.push_back(std::move(tm));
    v.push_back(std::move(tv));
  }
  opt.restore(j.at("t").get<std::int64_t>(), std::move(m), std::move(v));
}

json stats_json(const ChannelStats& st) {
  return json{{"mean", doubles_bytes(st.mean)}, {"std", doubles_bytes(st.stddev)}};
}

ChannelStats stats_from_json(const json& j) {
  ChannelStats st;
  st.mean = bytes_doubles(j.at("mean").get_binary());
  st.stddev = bytes_doubles(j.at("std").get_binary());
  return st;
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  json j;
  j["format"] = 1;
  j["arch_hash"] = bundle.arch_hash();
  j["variant"] = to_string(bundle.variant);
  j["base_channels"] = bundle.base_channels;
  j["lambda"] = bundle.lambda;
  j["l_exc_mean_over_included"] = bundle.l_exc_mean_over_included;
  j["seed"] = bundle.seed;
  j["epoch"] = bundle.epoch;
  j["rng_state"] = bundle.rng.state();
  const auto& ac = bundle.opt_g.config();
  j["lr"] = ac.lr;
  j["beta1"] = ac.beta1;
  j["beta2"] = ac.beta2;

  json params = json::object();
  // named_params is non-const by design; serialization only reads
  auto& mutable_bundle = const_cast<ModelBundle&>(bundle);
  for (const auto& [name, p] : mutable_bundle.named_params())
    params[name] = json{{"c", p->v.c()}, {"h", p->v.h()}, {"w", p->v.w()}, {"data", tensor_bytes(p->v)}};
  j["params"] = std::move(params);

  j["adam"] = json{{"G", adam_json(bundle.opt_g)},
                   {"D", adam_json(bundle.opt_d)},
                   {"S", adam_json(bundle.opt_s)}};

  json bank = json::object();
  for (int o = 0; o < kOrganCount; ++o) {
    const OrganStyle& st = bundle.bank.organs[o];
    json layers = json::array();
    for (const auto& ls : st.layer_stats) layers.push_back(stats_json(ls));
    bank[kOrganKeys[o]] =
        json{{"n_exemplars", st.n_exemplars}, {"layers", std::move(layers)},
             {"trained", bundle.adaon[o].trained}};
  }
  j["adaon"] = std::move(bank);

  const std::vector<std::uint8_t> payload = json::to_msgpack(j);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  f.write(kMagic, sizeof(kMagic));
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (!f) throw std::runtime_error("short checkpoint write: " + path.string());
}

std::unique_ptr<ModelBundle> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  std::vector<std::uint8_t> payload((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
  const json j = json::from_msgpack(payload);

  TrainConfig cfg;
  cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  cfg.base_channels = j.at("base_channels").get<int>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.l_exc_mean_over_included = j.at("l_exc_mean_over_included").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.lr = j.at("lr").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();

  auto bundle = std::make_unique<ModelBundle>(cfg);
  if (bundle->arch_hash() != j.at("arch_hash").get<std::uint64_t>())
    throw std::runtime_error("checkpoint architecture hash mismatch");

  const json& params = j.at("params");
  for (auto& [name, p] : bundle->named_params()) {
    if (!params.contains(name)) throw std::runtime_error("checkpoint missing parameter " + name);
    const json& pj = params.at(name);
    if (pj.at("c").get<int>() != p->v.c() || pj.at("h").get<int>() != p->v.h() ||
        pj.at("w").get<int>() != p->v.w())
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    fill_tensor(p->v, pj.at("data").get_binary());
  }

  adam_restore(bundle->opt_g, j.at("adam").at("G"), bundle->G.params());
  adam_restore(bundle->opt_d, j.at("adam").at("D"), bundle->D.params());
  adam_restore(bundle->opt_s, j.at("adam").at("S"), bundle->S.params());

  for (int o = 0; o < kOrganCount; ++o) {
    const json& oj = j.at("adaon").at(kOrganKeys[o]);
    OrganStyle st;
    st.n_exemplars = oj.at("n_exemplars").get<int>();
    const json& layers = oj.at("layers");
    for (int l = 0; l < 3; ++l) st.layer_stats[l] = stats_from_json(layers[l]);
    bundle->bank.organs[o] = std::move(st);
    bundle->adaon[o].trained = oj.at("trained").get<bool>();
  }

  bundle->epoch = j.at("epoch").get<int>();
  bundle->rng.set_state(j.at("rng_state").get<std::array<std::uint64_t, 4>>());
  return bundle;
}

}  // namespace synct
