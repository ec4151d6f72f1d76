#include "comformer/model/layers.hpp"

#include "comformer/error.hpp"
#include "comformer/kernels.hpp"

#include <cmath>

namespace comformer::model {
namespace {

[[noreturn]] void shape_error(const std::string& what) { throw Error(ErrorCode::kShapeMismatch, what); }

// Column block [part * width, (part + 1) * width) of a linear map as a
// contiguous matrix, so the concatenated input can be applied piecewise.
std::vector<double> column_block(const LinearView& lin, std::size_t part, std::size_t width) {
  std::vector<double> block(lin.out * width);
  for (std::size_t r = 0; r < lin.out; ++r) {
    const double* src = lin.weight + r * lin.in + part * width;
    std::copy(src, src + width, block.data() + r * width);
  }
  return block;
}

// sigma(x) = fc2(silu(x)) where x already holds fc1's output.
void silu_then(const LinearView& fc2, std::vector<double>& pre, double* out) {
  for (double& v : pre) v = silu(v);
  fc2.apply(pre.data(), out);
}

Dense apply_rows(const LinearView& lin, const Dense& x) {
  if (x.cols != lin.in) shape_error("linear input width mismatch");
  Dense y(x.rows, lin.out);
  for (std::size_t i = 0; i < x.rows; ++i) lin.apply(x.row(i), y.row(i));
  return y;
}

void require_width(const Dense& d, std::size_t cols, const char* what) {
  if (d.cols != cols) shape_error(std::string(what) + " has width " + std::to_string(d.cols) + ", expected " + std::to_string(cols));
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

void LinearView::apply(const double* x, double* y) const { kernels::gemv(weight, out, in, x, bias, y); }

LinearView linear_view(const Parameters& params, const std::string& name) {
  const Tensor& w = params.at(name + ".weight");
  if (w.shape.size() != 2) shape_error("'" + name + ".weight' must be a matrix");
  LinearView view;
  view.weight = w.data.data();
  view.out = w.shape[0];
  view.in = w.shape[1];
  if (params.contains(name + ".bias")) {
    const Tensor& b = params.at(name + ".bias");
    if (b.shape.size() != 1 || b.shape[0] != view.out) shape_error("'" + name + ".bias' does not match its weight");
    view.bias = b.data.data();
  }
  return view;
}

void BatchNormView::apply(double* x) const {
  for (std::size_t i = 0; i < scale.size(); ++i) x[i] = x[i] * scale[i] + shift[i];
}

BatchNormView batch_norm_view(const Parameters& params, const std::string& name, double eps) {
  const Tensor& gamma = params.at(name + ".gamma");
  const Tensor& beta = params.at(name + ".beta");
  const Tensor& mean = params.at(name + ".running_mean");
  const Tensor& var = params.at(name + ".running_var");
  const std::size_t dim = gamma.size();
  if (beta.size() != dim || mean.size() != dim || var.size() != dim) shape_error("batch norm '" + name + "' is inconsistent");
  BatchNormView view;
  view.scale.resize(dim);
  view.shift.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    view.scale[i] = gamma.data[i] / std::sqrt(var.data[i] + eps);
    view.shift[i] = beta.data[i] - mean.data[i] * view.scale[i];
  }
  return view;
}

std::vector<double> rbf_expand(double x, const RbfSpec& spec) {
  const auto centers = spec.centers();
  std::vector<double> out(centers.size());
  kernels::rbf(x, centers.data(), spec.gamma(), out.data(), out.size());
  return out;
}

EdgeIndex build_edge_index(const CrystalGraph& graph) {
  const std::size_t n = graph.num_nodes();
  EdgeIndex index;
  index.offsets.assign(n + 1, 0);
  index.lattice.assign(n, {EdgeIndex::npos, EdgeIndex::npos, EdgeIndex::npos});
  for (const auto& e : graph.edges) {
    if (e.dst < 0 || static_cast<std::size_t>(e.dst) >= n || e.src < 0 || static_cast<std::size_t>(e.src) >= n) {
      throw Error(ErrorCode::kInvalidCrystal, "edge references a missing node");
    }
    ++index.offsets[static_cast<std::size_t>(e.dst) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) index.offsets[i + 1] += index.offsets[i];
  index.edges.resize(graph.edges.size());
  std::vector<std::size_t> fill(index.offsets.begin(), index.offsets.end() - 1);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    const auto dst = static_cast<std::size_t>(edge.dst);
    index.edges[fill[dst]++] = e;
    if (edge.slot >= 1 && edge.slot <= 3 && edge.src == edge.dst) {
      auto& slot = index.lattice[dst][static_cast<std::size_t>(edge.slot - 1)];
      if (slot == EdgeIndex::npos) slot = e;
    }
  }
  return index;
}

Dense embed_nodes(const std::vector<int>& atomic_numbers, const Parameters& params, const ModelConfig& config) {
  const Tensor& table = params.at("species_table");
  const auto dim = static_cast<std::size_t>(config.embed_dim_species);
  if (table.shape != std::vector<std::size_t>{119, dim}) shape_error("species_table must be 119 x embed_dim_species");
  const LinearView lin = linear_view(params, "embed.node");
  if (lin.in != dim || lin.out != static_cast<std::size_t>(config.hidden_dim)) shape_error("embed.node has the wrong shape");
  Dense out(atomic_numbers.size(), lin.out);
  for (std::size_t i = 0; i < atomic_numbers.size(); ++i) {
    const int z = atomic_numbers[i];
    if (z < 1 || z > 118) throw Error(ErrorCode::kUnknownSpecies, "atomic number " + std::to_string(z) + " outside 1..118");
    lin.apply(table.data.data() + static_cast<std::size_t>(z) * dim, out.row(i));
  }
  return out;
}

namespace {

void embed_scalar(double x, const RbfSpec& spec, const std::vector<double>& centers, const LinearView& lin,
                  std::vector<double>& scratch, double* out) {
  scratch.resize(centers.size());
  kernels::rbf(x, centers.data(), spec.gamma(), scratch.data(), scratch.size());
  lin.apply(scratch.data(), out);
  for (std::size_t c = 0; c < lin.out; ++c) out[c] = softplus(out[c]);
}

void check_distance(double dist) {
  if (!(dist > 0.0) || !std::isfinite(dist)) {
    throw Error(ErrorCode::kNonpositiveDistance, "edge distance must be positive and finite");
  }
}

}  // namespace

InvariantEdgeEmbedding embed_edge_invariant(double dist, const std::array<double, 3>& angles, const Parameters& params,
                                            const ModelConfig& config) {
  check_distance(dist);
  const LinearView edge = linear_view(params, "embed.edge");
  const LinearView angle = linear_view(params, "embed.angle");
  const auto dc = config.rbf_dist.centers();
  const auto ac = config.rbf_angle.centers();
  std::vector<double> scratch;
  InvariantEdgeEmbedding out;
  out.f_e.resize(edge.out);
  embed_scalar(config.potential_constant / dist, config.rbf_dist, dc, edge, scratch, out.f_e.data());
  for (std::size_t m = 0; m < 3; ++m) {
    out.f_theta[m].resize(angle.out);
    embed_scalar(std::cos(angles[m]), config.rbf_angle, ac, angle, scratch, out.f_theta[m].data());
  }
  return out;
}

Dense embed_edge_distances(const CrystalGraph& graph, const Parameters& params, const ModelConfig& config) {
  const LinearView lin = linear_view(params, "embed.edge");
  if (lin.in != static_cast<std::size_t>(config.rbf_dist.count)) shape_error("embed.edge input must match rbf_dist.count");
  const auto centers = config.rbf_dist.centers();
  Dense out(graph.edges.size(), lin.out);
  std::vector<double> scratch;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const double dist = graph.edges[e].dist;
    check_distance(dist);
    embed_scalar(config.potential_constant / dist, config.rbf_dist, centers, lin, scratch, out.row(e));
  }
  return out;
}

std::array<Dense, 3> embed_edge_angles(const CrystalGraph& graph, const Parameters& params, const ModelConfig& config) {
  const LinearView lin = linear_view(params, "embed.angle");
  if (lin.in != static_cast<std::size_t>(config.rbf_angle.count)) shape_error("embed.angle input must match rbf_angle.count");
  const auto centers = config.rbf_angle.centers();
  std::array<Dense, 3> out{Dense(graph.edges.size(), lin.out), Dense(graph.edges.size(), lin.out),
                           Dense(graph.edges.size(), lin.out)};
  std::vector<double> scratch;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    if (!edge.angles) throw Error(ErrorCode::kWrongGraphKind, "angle embedding needs an invariant graph");
    for (std::size_t m = 0; m < 3; ++m) {
      embed_scalar(std::cos((*edge.angles)[m]), config.rbf_angle, centers, lin, scratch, out[m].row(e));
    }
  }
  return out;
}

Dense node_transformer_layer(const Dense& nodes, const Dense& edge_features, const CrystalGraph& graph,
                             const EdgeIndex& index, const Parameters& params, const ModelConfig& config, int layer) {
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  const std::string p = "node" + std::to_string(layer);
  require_width(nodes, h, "node features");
  require_width(edge_features, h, "edge features");
  if (nodes.rows != graph.num_nodes() || edge_features.rows != graph.edges.size()) shape_error("feature rows do not match the graph");

  const LinearView ln_q = linear_view(params, p + ".LN_Q");
  const LinearView ln_k = linear_view(params, p + ".LN_K");
  const LinearView ln_v = linear_view(params, p + ".LN_V");
  const LinearView ln_e = linear_view(params, p + ".LN_E");
  const LinearView k1 = linear_view(params, p + ".sigma_K.fc1");
  const LinearView k2 = linear_view(params, p + ".sigma_K.fc2");
  const LinearView v1 = linear_view(params, p + ".sigma_V.fc1");
  const LinearView v2 = linear_view(params, p + ".sigma_V.fc2");
  if (k1.in != 3 * h || v1.in != 3 * h || k1.out != h || v1.out != h) shape_error(p + " sigma maps must be 3h -> h");
  const BatchNormView bn_alpha = batch_norm_view(params, p + ".BN_alpha", config.bn_eps);
  const BatchNormView bn_msg = batch_norm_view(params, p + ".BN_msg", config.bn_eps);

  // The concatenated key (center | neighbor | edge) enters fc1 blockwise.
  const auto kb = std::array{column_block(k1, 0, h), column_block(k1, 1, h), column_block(k1, 2, h)};
  const auto vb = std::array{column_block(v1, 0, h), column_block(v1, 1, h), column_block(v1, 2, h)};

  const std::size_t n = nodes.rows;
  const Dense q = apply_rows(ln_q, nodes);
  const Dense kn = apply_rows(ln_k, nodes);
  const Dense vn = apply_rows(ln_v, nodes);
  Dense k_center(n, h), k_neigh(n, h), v_center(n, h), v_neigh(n, h);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::gemv(kb[0].data(), h, h, kn.row(i), k1.bias, k_center.row(i));
    kernels::gemv(kb[1].data(), h, h, kn.row(i), nullptr, k_neigh.row(i));
    kernels::gemv(vb[0].data(), h, h, vn.row(i), v1.bias, v_center.row(i));
    kernels::gemv(vb[1].data(), h, h, vn.row(i), nullptr, v_neigh.row(i));
  }

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(h));
  Dense out(n, h);
  std::vector<double> e_proj(h), pre_k(h), pre_v(h), key(h), value(h), alpha(h), msg(h), tmp(h);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(msg.begin(), msg.end(), 0.0);
    for (std::size_t e : index.incoming(i)) {
      const auto j = static_cast<std::size_t>(graph.edges[e].src);
      ln_e.apply(edge_features.row(e), e_proj.data());
      kernels::gemv(kb[2].data(), h, h, e_proj.data(), nullptr, pre_k.data());
      kernels::gemv(vb[2].data(), h, h, e_proj.data(), nullptr, pre_v.data());
      for (std::size_t c = 0; c < h; ++c) {
        pre_k[c] += k_center.row(i)[c] + k_neigh.row(j)[c];
        pre_v[c] += v_center.row(i)[c] + v_neigh.row(j)[c];
      }
      silu_then(k2, pre_k, key.data());
      silu_then(v2, pre_v, value.data());
      for (std::size_t c = 0; c < h; ++c) alpha[c] = q.row(i)[c] * key[c] * inv_sqrt;
      bn_alpha.apply(alpha.data());
      for (std::size_t c = 0; c < h; ++c) msg[c] += sigmoid(alpha[c]) * value[c];
    }
    bn_msg.apply(msg.data());
    for (std::size_t c = 0; c < h; ++c) out.row(i)[c] = softplus(nodes.row(i)[c] + msg[c]);
  }
  return out;
}

Dense edge_transformer_layer(const Dense& edge_features, const std::array<Dense, 3>& angle_features,
                             const CrystalGraph& graph, const EdgeIndex& index, const Parameters& params,
                             const ModelConfig& config, int layer) {
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  const std::string p = "edge" + std::to_string(layer);
  require_width(edge_features, h, "edge features");
  const std::size_t n_edges = graph.edges.size();
  if (edge_features.rows != n_edges) shape_error("edge feature rows do not match the graph");
  for (const auto& a : angle_features) {
    require_width(a, h, "angle features");
    if (a.rows != n_edges) shape_error("angle feature rows do not match the graph");
  }
  const std::size_t n = graph.num_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < 3; ++m) {
      if (index.lattice[i][m] == EdgeIndex::npos) {
        throw Error(ErrorCode::kMissingSelfEdges,
                    "node " + std::to_string(i) + " lacks lattice self-edge " + std::to_string(m + 1));
      }
    }
  }

  const LinearView ln_q = linear_view(params, p + ".LN_Q");
  const LinearView ln_k = linear_view(params, p + ".LN_K");
  const LinearView ln_v = linear_view(params, p + ".LN_V");
  const LinearView ln_theta = linear_view(params, p + ".LN_theta");
  std::array<LinearView, 3> ln_k_theta, ln_v_theta;
  for (std::size_t m = 0; m < 3; ++m) {
    ln_k_theta[m] = linear_view(params, p + ".LN_K_theta" + std::to_string(m + 1));
    ln_v_theta[m] = linear_view(params, p + ".LN_V_theta" + std::to_string(m + 1));
  }
  const LinearView k1 = linear_view(params, p + ".sigma_K.fc1");
  const LinearView k2 = linear_view(params, p + ".sigma_K.fc2");
  const LinearView v1 = linear_view(params, p + ".sigma_V.fc1");
  const LinearView v2 = linear_view(params, p + ".sigma_V.fc2");
  if (k1.in != 3 * h || v1.in != 3 * h) shape_error(p + " sigma maps must be 3h -> h");
  const BatchNormView bn_alpha = batch_norm_view(params, p + ".BN_alpha", config.bn_eps);
  const BatchNormView bn_msg = batch_norm_view(params, p + ".BN_msg", config.bn_eps);
  const auto kb = std::array{column_block(k1, 0, h), column_block(k1, 1, h), column_block(k1, 2, h)};
  const auto vb = std::array{column_block(v1, 0, h), column_block(v1, 1, h), column_block(v1, 2, h)};

  // Lattice-edge keys/values per (node, m): fc1 block 1 applied to LN^{theta_m}(f^e_{ii_m}).
  std::array<Dense, 3> k_lat{Dense(n, h), Dense(n, h), Dense(n, h)};
  std::array<Dense, 3> v_lat{Dense(n, h), Dense(n, h), Dense(n, h)};
  std::vector<double> tmp(h);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < 3; ++m) {
      const double* f_lat = edge_features.row(index.lattice[i][m]);
      ln_k_theta[m].apply(f_lat, tmp.data());
      kernels::gemv(kb[1].data(), h, h, tmp.data(), nullptr, k_lat[m].row(i));
      ln_v_theta[m].apply(f_lat, tmp.data());
      kernels::gemv(vb[1].data(), h, h, tmp.data(), nullptr, v_lat[m].row(i));
    }
  }

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(h));
  Dense out(n_edges, h);
  std::vector<double> q(h), proj(h), k_edge(h), v_edge(h), theta(h), pre_k(h), pre_v(h), key(h), value(h), alpha(h),
      msg(h);
  for (std::size_t e = 0; e < n_edges; ++e) {
    const auto i = static_cast<std::size_t>(graph.edges[e].dst);
    const double* f = edge_features.row(e);
    ln_q.apply(f, q.data());
    ln_k.apply(f, proj.data());
    kernels::gemv(kb[0].data(), h, h, proj.data(), k1.bias, k_edge.data());
    ln_v.apply(f, proj.data());
    kernels::gemv(vb[0].data(), h, h, proj.data(), v1.bias, v_edge.data());
    std::fill(msg.begin(), msg.end(), 0.0);
    for (std::size_t m = 0; m < 3; ++m) {
      ln_theta.apply(angle_features[m].row(e), theta.data());
      kernels::gemv(kb[2].data(), h, h, theta.data(), nullptr, pre_k.data());
      kernels::gemv(vb[2].data(), h, h, theta.data(), nullptr, pre_v.data());
      for (std::size_t c = 0; c < h; ++c) {
        pre_k[c] += k_edge[c] + k_lat[m].row(i)[c];
        pre_v[c] += v_edge[c] + v_lat[m].row(i)[c];
      }
      silu_then(k2, pre_k, key.data());
      silu_then(v2, pre_v, value.data());
      for (std::size_t c = 0; c < h; ++c) alpha[c] = q[c] * key[c] * inv_sqrt;
      bn_alpha.apply(alpha.data());
      for (std::size_t c = 0; c < h; ++c) msg[c] += sigmoid(alpha[c]) * value[c];
    }
    bn_msg.apply(msg.data());
    for (std::size_t c = 0; c < h; ++c) out.row(e)[c] = softplus(f[c] + msg[c]);
  }
  return out;
}

SphericalFeature spherical_harmonics(const Vec3& unit, double c0, double c1) {
  const double norm = unit.norm();
  if (!(std::abs(norm - 1.0) <= 1e-9)) throw Error(ErrorCode::kNotUnit, "spherical harmonics need a unit vector");
  const double x = unit.x();
  const double y = unit.y();
  const double z = unit.z();
  const double s3 = std::sqrt(3.0);
  SphericalFeature f;
  f.y0 = c0;
  f.y1 = {c1 * x, c1 * y, c1 * z};
  f.y2 = {s3 * x * y, s3 * y * z, 0.5 * (3.0 * z * z - 1.0), s3 * x * z, 0.5 * s3 * (x * x - y * y)};
  return f;
}

std::vector<double> tensor_product_out0(const OrderFeature& feature, std::span<const double> y,
                                        std::span<const double> weights, std::size_t out) {
  const auto width = static_cast<std::size_t>(2 * feature.order + 1);
  if (y.size() != width) throw Error(ErrorCode::kOrderMismatch, "feature order does not match Y order");
  if (feature.data.size() != feature.channels * width || weights.size() != out * feature.channels) {
    shape_error("tensor product shapes are inconsistent");
  }
  std::vector<double> contraction(feature.channels);
  for (std::size_t k = 0; k < feature.channels; ++k) {
    contraction[k] = kernels::dot(feature.data.data() + k * width, y.data(), width);
  }
  std::vector<double> result(out);
  kernels::gemv(weights.data(), out, feature.channels, contraction.data(), nullptr, result.data());
  return result;
}

OrderFeature tensor_product_out_lambda(std::span<const double> scalars, int order, std::span<const double> y,
                                       std::span<const double> weights, std::size_t out) {
  if (order != 1 && order != 2) throw Error(ErrorCode::kOrderMismatch, "output order must be 1 or 2");
  const auto width = static_cast<std::size_t>(2 * order + 1);
  if (y.size() != width) throw Error(ErrorCode::kOrderMismatch, "Y order does not match the requested output order");
  if (weights.size() != out * scalars.size()) shape_error("tensor product weights have the wrong shape");
  std::vector<double> v(out);
  kernels::gemv(weights.data(), out, scalars.size(), scalars.data(), nullptr, v.data());
  OrderFeature result;
  result.order = order;
  result.channels = out;
  result.data.resize(out * width);
  for (std::size_t c = 0; c < out; ++c) {
    for (std::size_t a = 0; a < width; ++a) result.data[c * width + a] = v[c] * y[a];
  }
  return result;
}

EquivariantIntermediates equivariant_intermediates(const Dense& f_prime, const CrystalGraph& graph,
                                                   const EdgeIndex& index, const Parameters& params,
                                                   const ModelConfig& config, int layer) {
  if (graph.kind != GraphKind::kEquivariant) {
    throw Error(ErrorCode::kWrongGraphKind, "the equivariant updating layer needs an equivariant graph");
  }
  const auto c0 = static_cast<std::size_t>(config.tp_order0);
  const auto c12 = static_cast<std::size_t>(config.tp_order12);
  const std::size_t n = graph.num_nodes();
  require_width(f_prime, c0, "f'");
  if (f_prime.rows != n) shape_error("f' rows do not match the graph");
  const bool use2 = config.max_rotation_order >= 2;
  const std::string p = "equi" + std::to_string(layer);
  const LinearView tp1_0 = linear_view(params, p + ".tp1_0");
  const LinearView tp1_1 = linear_view(params, p + ".tp1_1");
  const LinearView tp1_2 = linear_view(params, p + ".tp1_2");
  const LinearView tp2_0 = linear_view(params, p + ".tp2_0");
  const LinearView tp2_1 = linear_view(params, p + ".tp2_1");
  const LinearView tp2_2 = linear_view(params, p + ".tp2_2");
  if (tp1_0.out != c0 || tp1_0.in != c0 || tp1_1.out != c12 || tp1_1.in != c0 || tp1_2.out != c12 ||
      tp1_2.in != c0 || tp2_0.out != c0 || tp2_0.in != c0 || tp2_1.out != c0 || tp2_1.in != c12 ||
      tp2_2.out != c0 || tp2_2.in != c12) {
    shape_error(p + " tensor-product weights have the wrong shape");
  }

  // Per-edge harmonics of the edge direction.
  std::vector<SphericalFeature> harmonics(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    if (!edge.vec) throw Error(ErrorCode::kWrongGraphKind, "equivariant edge lacks a vector");
    const double norm = edge.vec->norm();
    if (!(norm > 0.0)) throw Error(ErrorCode::kNonpositiveDistance, "zero-length edge vector");
    harmonics[e] = spherical_harmonics(*edge.vec / norm, config.sh_c0, config.sh_c1);
  }
  const auto inv_degree = [&](std::size_t i) {
    const std::size_t d = index.incoming(i).size();
    return d == 0 ? 0.0 : 1.0 / static_cast<double>(d);
  };

  // First stage. The path weights act on f'_j alone, so they are applied per node.
  Dense u0(n, c0), u1(n, c12), u2(n, c12);
  for (std::size_t j = 0; j < n; ++j) {
    tp1_0.apply(f_prime.row(j), u0.row(j));
    tp1_1.apply(f_prime.row(j), u1.row(j));
    if (use2) tp1_2.apply(f_prime.row(j), u2.row(j));
  }
  EquivariantIntermediates out;
  out.f0 = f_prime;
  out.f1 = Dense(n, c12 * 3);
  out.f2 = Dense(n, use2 ? c12 * 5 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = inv_degree(i);
    double* f0 = out.f0.row(i);
    double* f1 = out.f1.row(i);
    double* f2 = use2 ? out.f2.row(i) : nullptr;
    for (std::size_t e : index.incoming(i)) {
      const auto j = static_cast<std::size_t>(graph.edges[e].src);
      const SphericalFeature& y = harmonics[e];
      kernels::axpy(w * y.y0, u0.row(j), f0, c0);
      for (std::size_t c = 0; c < c12; ++c) {
        const double s = w * u1.row(j)[c];
        for (std::size_t a = 0; a < 3; ++a) f1[c * 3 + a] += s * y.y1[a];
        if (use2) {
          const double s2 = w * u2.row(j)[c];
          for (std::size_t a = 0; a < 5; ++a) f2[c * 5 + a] += s2 * y.y2[a];
        }
      }
    }
  }

  // Second stage: contract neighbor features with the edge harmonics.
  Dense g0(n, c0);
  for (std::size_t j = 0; j < n; ++j) tp2_0.apply(out.f0.row(j), g0.row(j));
  out.star0 = Dense(n, c0);
  out.star1 = Dense(n, c0);
  out.star2 = Dense(n, c0);
  out.f_star = Dense(n, c0);
  std::vector<double> s1(c12), s2(c12), tmp(c0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = inv_degree(i);
    for (std::size_t e : index.incoming(i)) {
      const auto j = static_cast<std::size_t>(graph.edges[e].src);
      const SphericalFeature& y = harmonics[e];
      kernels::axpy(w * y.y0, g0.row(j), out.star0.row(i), c0);
      for (std::size_t c = 0; c < c12; ++c) s1[c] = kernels::dot(out.f1.row(j) + c * 3, y.y1.data(), 3);
      tp2_1.apply(s1.data(), tmp.data());
      kernels::axpy(w, tmp.data(), out.star1.row(i), c0);
      if (use2) {
        for (std::size_t c = 0; c < c12; ++c) s2[c] = kernels::dot(out.f2.row(j) + c * 5, y.y2.data(), 5);
        tp2_2.apply(s2.data(), tmp.data());
        kernels::axpy(w, tmp.data(), out.star2.row(i), c0);
      }
    }
    for (std::size_t c = 0; c < c0; ++c) {
      out.f_star.row(i)[c] = out.star0.row(i)[c] + out.star1.row(i)[c] + out.star2.row(i)[c];
    }
  }
  return out;
}

Dense equivariant_update_layer(const Dense& nodes, const CrystalGraph& graph, const EdgeIndex& index,
                               const Parameters& params, const ModelConfig& config, int layer) {
  if (graph.kind != GraphKind::kEquivariant) {
    throw Error(ErrorCode::kWrongGraphKind, "the equivariant updating layer needs an equivariant graph");
  }
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  require_width(nodes, h, "node features");
  const std::string p = "equi" + std::to_string(layer);
  const LinearView ln = linear_view(params, p + ".LN");
  const LinearView sigma = linear_view(params, p + ".sigma_equi");
  const LinearView ln_equi = linear_view(params, p + ".LN_equi");
  const BatchNormView bn = batch_norm_view(params, p + ".BN", config.bn_eps);

  const Dense f_prime = apply_rows(ln, nodes);
  const EquivariantIntermediates mid = equivariant_intermediates(f_prime, graph, index, params, config, layer);
  const std::size_t c0 = f_prime.cols;
  Dense out(nodes.rows, h);
  std::vector<double> star(c0), lin(h);
  for (std::size_t i = 0; i < nodes.rows; ++i) {
    std::copy(mid.f_star.row(i), mid.f_star.row(i) + c0, star.begin());
    bn.apply(star.data());
    for (double& v : star) v = softplus(v);
    sigma.apply(star.data(), out.row(i));
    ln_equi.apply(nodes.row(i), lin.data());
    for (std::size_t c = 0; c < h; ++c) out.row(i)[c] = softplus(out.row(i)[c]) + lin[c];
  }
  return out;
}

}  // namespace comformer::model
