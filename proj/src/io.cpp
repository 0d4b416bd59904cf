#include "rismec/io.hpp"

#include <fstream>
#include <stdexcept>

namespace rismec {

namespace {

void check_schema(const Json& j, const std::string& expected) {
  if (!j.contains("schema") || j.at("schema").get<std::string>() != expected) {
    throw std::invalid_argument("expected schema '" + expected + "'");
  }
}

Json cmatrix_to_json(const CMatrix& m) {
  Json data = Json::array();
  for (long c = 0; c < m.cols(); ++c) {
    for (long r = 0; r < m.rows(); ++r) {
      data.push_back({m(r, c).real(), m(r, c).imag()});
    }
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

CMatrix cmatrix_from_json(const Json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto& data = j.at("data");
  if (static_cast<long>(data.size()) != rows * cols) {
    throw std::invalid_argument("complex matrix size mismatch");
  }
  CMatrix m(rows, cols);
  long idx = 0;
  for (long c = 0; c < cols; ++c) {
    for (long r = 0; r < rows; ++r) {
      m(r, c) = Complex(data[idx][0].get<double>(), data[idx][1].get<double>());
      ++idx;
    }
  }
  return m;
}

Json rvector_to_json(const RVector& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

RVector rvector_from_json(const Json& j) {
  auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const RVector>(vals.data(), static_cast<long>(vals.size()));
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (long r = 0; r < m.rows(); ++r) {
    data.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  Matrix m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    auto row = j.at("data")[r].get<std::vector<double>>();
    if (static_cast<long>(row.size()) != cols) {
      throw std::invalid_argument("real matrix size mismatch");
    }
    for (long c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

Json config_to_json(const SystemConfig& c) {
  return Json{
      {"schema", "rismec.config.v1"},
      {"n_ue", c.n_ue},
      {"m_ant", c.m_ant},
      {"k_y", c.k_y},
      {"k_z", c.k_z},
      {"slot_s", c.slot_s},
      {"bandwidth_hz", c.bandwidth_hz},
      {"noise_w", c.noise_w},
      {"energy_j", c.energy_j},
      {"cycles_per_bit", c.cycles_per_bit},
      {"kappa", c.kappa},
      {"ap_pos", {c.ap_pos.x(), c.ap_pos.y(), c.ap_pos.z()}},
      {"ris_pos", {c.ris_pos.x(), c.ris_pos.y(), c.ris_pos.z()}},
      {"area_x0", c.area_x0},
      {"area_y0", c.area_y0},
      {"area_side", c.area_side},
      {"l0", c.l0},
      {"d0", c.d0},
      {"alpha_d", c.alpha_d},
      {"alpha_r", c.alpha_r},
      {"alpha_ap", c.alpha_ap},
      {"ris_element_gain", c.ris_element_gain},
      {"zeta_r", c.zeta_r},
      {"zeta_ap", c.zeta_ap},
      {"zeta_d", c.zeta_d},
      {"eps_bits_rel", c.eps_bits_rel},
      {"eps_psi", c.eps_psi},
      {"a_cap", c.a_cap},
      {"max_outer_iters", c.max_outer_iters},
      {"max_inner_iters", c.max_inner_iters},
  };
}

SystemConfig config_from_json(const Json& j) {
  check_schema(j, "rismec.config.v1");
  SystemConfig c;
  // Every field is optional; unspecified fields keep their defaults.
  auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  get("n_ue", c.n_ue);
  get("m_ant", c.m_ant);
  get("k_y", c.k_y);
  get("k_z", c.k_z);
  get("slot_s", c.slot_s);
  get("bandwidth_hz", c.bandwidth_hz);
  get("noise_w", c.noise_w);
  get("energy_j", c.energy_j);
  get("cycles_per_bit", c.cycles_per_bit);
  get("kappa", c.kappa);
  if (j.contains("ap_pos")) {
    auto v = j.at("ap_pos").get<std::vector<double>>();
    c.ap_pos = Vec3(v.at(0), v.at(1), v.at(2));
  }
  if (j.contains("ris_pos")) {
    auto v = j.at("ris_pos").get<std::vector<double>>();
    c.ris_pos = Vec3(v.at(0), v.at(1), v.at(2));
  }
  get("area_x0", c.area_x0);
  get("area_y0", c.area_y0);
  get("area_side", c.area_side);
  get("l0", c.l0);
  get("d0", c.d0);
  get("alpha_d", c.alpha_d);
  get("alpha_r", c.alpha_r);
  get("alpha_ap", c.alpha_ap);
  get("ris_element_gain", c.ris_element_gain);
  get("zeta_r", c.zeta_r);
  get("zeta_ap", c.zeta_ap);
  get("zeta_d", c.zeta_d);
  get("eps_bits_rel", c.eps_bits_rel);
  get("eps_psi", c.eps_psi);
  get("a_cap", c.a_cap);
  get("max_outer_iters", c.max_outer_iters);
  get("max_inner_iters", c.max_inner_iters);
  c.finalize();
  c.validate();
  return c;
}

Json channels_to_json(const ChannelSet& channels) {
  Json positions = Json::array();
  for (const auto& p : channels.ue_positions) {
    positions.push_back({p.x(), p.y(), p.z()});
  }
  return Json{
      {"schema", "rismec.channels.v1"},
      {"h_d", cmatrix_to_json(channels.h_d)},
      {"h_r", cmatrix_to_json(channels.h_r)},
      {"h_ap", cmatrix_to_json(channels.h_ap)},
      {"ue_positions", std::move(positions)},
  };
}

ChannelSet channels_from_json(const Json& j) {
  check_schema(j, "rismec.channels.v1");
  ChannelSet cs;
  cs.h_d = cmatrix_from_json(j.at("h_d"));
  cs.h_r = cmatrix_from_json(j.at("h_r"));
  cs.h_ap = cmatrix_from_json(j.at("h_ap"));
  for (const auto& p : j.at("ue_positions")) {
    cs.ue_positions.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                 p[2].get<double>());
  }
  return cs;
}

Json solution_to_json(const Solution& s) {
  return Json{
      {"schema", "rismec.solution.v1"},
      {"phi", cmatrix_to_json(s.phi)},
      {"a", rvector_to_json(s.a)},
      {"w", cmatrix_to_json(s.w)},
      {"objective_bits", s.objective_bits},
      {"trace", s.trace},
      {"converged", s.converged},
      {"warning", s.warning},
  };
}

Solution solution_from_json(const Json& j) {
  check_schema(j, "rismec.solution.v1");
  Solution s;
  s.phi = cmatrix_from_json(j.at("phi"));
  s.a = rvector_from_json(j.at("a"));
  s.w = cmatrix_from_json(j.at("w"));
  s.objective_bits = j.at("objective_bits").get<double>();
  s.trace = j.at("trace").get<std::vector<double>>();
  s.converged = j.at("converged").get<bool>();
  s.warning = j.at("warning").get<std::string>();
  return s;
}

Json scaler_to_json(const MinMaxScaler& scaler) {
  return Json{
      {"schema", "rismec.scaler.v1"},
      {"min", rvector_to_json(scaler.min)},
      {"max", rvector_to_json(scaler.max)},
  };
}

MinMaxScaler scaler_from_json(const Json& j) {
  check_schema(j, "rismec.scaler.v1");
  MinMaxScaler s;
  s.min = rvector_from_json(j.at("min"));
  s.max = rvector_from_json(j.at("max"));
  return s;
}

Json model_to_json(const MlpModel& model) {
  Json layers = Json::array();
  for (const auto& l : model.spec.layers) {
    layers.push_back({
        {"width", l.width},
        {"activation", static_cast<int>(l.activation)},
        {"batch_norm", l.batch_norm},
        {"dropout", l.dropout},
    });
  }
  Json dense = Json::array();
  for (const auto& d : model.dense) {
    dense.push_back({
        {"w", matrix_to_json(d.w)},
        {"b", rvector_to_json(d.b)},
        {"m_w", matrix_to_json(d.m_w)},
        {"v_w", matrix_to_json(d.v_w)},
        {"m_b", rvector_to_json(d.m_b)},
        {"v_b", rvector_to_json(d.v_b)},
    });
  }
  Json bn = Json::array();
  for (const auto& maybe : model.bn) {
    if (!maybe) {
      bn.push_back(nullptr);
      continue;
    }
    bn.push_back({
        {"scale", rvector_to_json(maybe->scale)},
        {"shift", rvector_to_json(maybe->shift)},
        {"running_mean", rvector_to_json(maybe->running_mean)},
        {"running_var", rvector_to_json(maybe->running_var)},
        {"m_scale", rvector_to_json(maybe->m_scale)},
        {"v_scale", rvector_to_json(maybe->v_scale)},
        {"m_shift", rvector_to_json(maybe->m_shift)},
        {"v_shift", rvector_to_json(maybe->v_shift)},
        {"momentum", maybe->momentum},
        {"epsilon", maybe->epsilon},
    });
  }
  return Json{
      {"schema", "rismec.model.v1"},
      {"input_dim", model.spec.input_dim},
      {"layers", std::move(layers)},
      {"dense", std::move(dense)},
      {"bn", std::move(bn)},
      {"adam_step", model.adam_step},
  };
}

MlpModel model_from_json(const Json& j) {
  check_schema(j, "rismec.model.v1");
  MlpModel model;
  model.spec.input_dim = j.at("input_dim").get<int>();
  for (const auto& l : j.at("layers")) {
    model.spec.layers.push_back({
        l.at("width").get<int>(),
        static_cast<Activation>(l.at("activation").get<int>()),
        l.at("batch_norm").get<bool>(),
        l.at("dropout").get<double>(),
    });
  }
  for (const auto& d : j.at("dense")) {
    DenseParams p;
    p.w = matrix_from_json(d.at("w"));
    p.b = rvector_from_json(d.at("b"));
    p.m_w = matrix_from_json(d.at("m_w"));
    p.v_w = matrix_from_json(d.at("v_w"));
    p.m_b = rvector_from_json(d.at("m_b"));
    p.v_b = rvector_from_json(d.at("v_b"));
    model.dense.push_back(std::move(p));
  }
  for (const auto& b : j.at("bn")) {
    if (b.is_null()) {
      model.bn.push_back(std::nullopt);
      continue;
    }
    BatchNormParams p;
    p.scale = rvector_from_json(b.at("scale"));
    p.shift = rvector_from_json(b.at("shift"));
    p.running_mean = rvector_from_json(b.at("running_mean"));
    p.running_var = rvector_from_json(b.at("running_var"));
    p.m_scale = rvector_from_json(b.at("m_scale"));
    p.v_scale = rvector_from_json(b.at("v_scale"));
    p.m_shift = rvector_from_json(b.at("m_shift"));
    p.v_shift = rvector_from_json(b.at("v_shift"));
    p.momentum = b.at("momentum").get<double>();
    p.epsilon = b.at("epsilon").get<double>();
    model.bn.push_back(std::move(p));
  }
  model.adam_step = j.at("adam_step").get<long>();
  if (model.dense.size() != model.spec.layers.size() ||
      model.bn.size() != model.spec.layers.size()) {
    throw std::invalid_argument("model checkpoint layer count mismatch");
  }
  return model;
}

Json surrogates_to_json(const SurrogateModels& models) {
  Json j{{"schema", "rismec.surrogates.v1"}};
  if (models.csi) j["csi"] = model_to_json(*models.csi);
  if (models.loc1) j["loc1"] = model_to_json(*models.loc1);
  if (models.loc2) j["loc2"] = model_to_json(*models.loc2);
  if (models.csi_input_scaler) j["csi_input_scaler"] = scaler_to_json(*models.csi_input_scaler);
  if (models.loc_input_scaler) j["loc_input_scaler"] = scaler_to_json(*models.loc_input_scaler);
  if (models.channel_feature_scaler) {
    j["channel_feature_scaler"] = scaler_to_json(*models.channel_feature_scaler);
  }
  return j;
}

SurrogateModels surrogates_from_json(const Json& j) {
  check_schema(j, "rismec.surrogates.v1");
  SurrogateModels m;
  if (j.contains("csi")) m.csi = model_from_json(j.at("csi"));
  if (j.contains("loc1")) m.loc1 = model_from_json(j.at("loc1"));
  if (j.contains("loc2")) m.loc2 = model_from_json(j.at("loc2"));
  if (j.contains("csi_input_scaler")) m.csi_input_scaler = scaler_from_json(j.at("csi_input_scaler"));
  if (j.contains("loc_input_scaler")) m.loc_input_scaler = scaler_from_json(j.at("loc_input_scaler"));
  if (j.contains("channel_feature_scaler")) {
    m.channel_feature_scaler = scaler_from_json(j.at("channel_feature_scaler"));
  }
  return m;
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Json j;
  in >> j;
  return j;
}

void save_json(const Json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump();
  out << '\n';
}

void save_loss_csv(const FitResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (size_t e = 0; e < result.train_loss.size(); ++e) {
    out << e << ',' << result.train_loss[e] << ',' << result.val_loss[e] << '\n';
  }
}

}  // namespace rismec
