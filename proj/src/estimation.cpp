#include "lpcfg/estimation.hpp"

#include <algorithm>
#include <unordered_map>

#include "lpcfg/kmeans.hpp"
#include "lpcfg/parallel.hpp"
#include "lpcfg/svd.hpp"

namespace lpcfg {

namespace {

int64_t pack2(int a, int b) { return (static_cast<int64_t>(a) << 32) | static_cast<uint32_t>(b); }

}  // namespace

double CovarianceAccumulator::entry(int symbol, int inside_feature,
                                    int outside_feature) const {
  auto it = blocks.find(symbol);
  if (it == blocks.end()) return 0.0;
  const Block& block = it->second;
  auto row = std::lower_bound(block.inside_features.begin(),
                              block.inside_features.end(), inside_feature);
  auto col = std::lower_bound(block.outside_features.begin(),
                              block.outside_features.end(), outside_feature);
  if (row == block.inside_features.end() || *row != inside_feature) return 0.0;
  if (col == block.outside_features.end() || *col != outside_feature) return 0.0;
  return block.matrix.value(
      static_cast<int>(row - block.inside_features.begin()),
      static_cast<int>(col - block.outside_features.begin()));
}

CovarianceAccumulator build_omega(const std::vector<InstanceRecord>& instances,
                                  const std::vector<SparseFeatureVector>& inside,
                                  const std::vector<SparseFeatureVector>& outside,
                                  int num_symbols) {
  CovarianceAccumulator acc;
  // Collect the per-block active features first so local ids are dense.
  std::vector<std::vector<int>> in_feats(num_symbols), out_feats(num_symbols);
  std::vector<int64_t> counts(num_symbols, 0);
  for (size_t i = 0; i < instances.size(); ++i) {
    int a = instances[i].symbol;
    ++counts[a];
    for (const auto& [id, v] : inside[i].entries) in_feats[a].push_back(id);
    for (const auto& [id, v] : outside[i].entries) out_feats[a].push_back(id);
  }
  auto dedupe = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  std::vector<std::unordered_map<int, int>> in_local(num_symbols),
      out_local(num_symbols);
  for (int a = 0; a < num_symbols; ++a) {
    if (counts[a] == 0) continue;
    dedupe(in_feats[a]);
    dedupe(out_feats[a]);
    for (size_t i = 0; i < in_feats[a].size(); ++i) in_local[a][in_feats[a][i]] = i;
    for (size_t i = 0; i < out_feats[a].size(); ++i) out_local[a][out_feats[a][i]] = i;
    CovarianceAccumulator::Block block;
    block.inside_features = in_feats[a];
    block.outside_features = out_feats[a];
    block.count = counts[a];
    block.matrix = SparseMatrix(static_cast<int>(in_feats[a].size()),
                                static_cast<int>(out_feats[a].size()));
    acc.blocks.emplace(a, std::move(block));
  }
  // Sum of outer products, then one division by the block count.
  std::unordered_map<int, std::unordered_map<int64_t, double>> sums;
  for (size_t i = 0; i < instances.size(); ++i) {
    int a = instances[i].symbol;
    auto& sum = sums[a];
    for (const auto& [fi, vi] : inside[i].entries) {
      int row = in_local[a][fi];
      for (const auto& [fo, vo] : outside[i].entries) {
        sum[pack2(row, out_local[a][fo])] += vi * vo;
      }
    }
  }
  for (auto& [a, block] : acc.blocks) {
    double inv = 1.0 / static_cast<double>(block.count);
    std::vector<std::pair<int64_t, double>> entries(sums[a].begin(), sums[a].end());
    std::sort(entries.begin(), entries.end());
    for (const auto& [key, value] : entries) {
      block.matrix.add(static_cast<int>(key >> 32),
                       static_cast<int>(key & 0xffffffff), value * inv);
    }
  }
  return acc;
}

LatentGrammar estimate_from_annotated(const std::vector<AnnotatedTree>& treebank,
                                      const SymbolTable& symbols,
                                      bool signature_backoff,
                                      int rare_word_threshold) {
  if (treebank.empty()) throw Error("cannot estimate from an empty treebank");

  std::vector<int> m_per_symbol(symbols.num_symbols(), 1);
  for (const AnnotatedTree& at : treebank) {
    for (int n = 0; n < at.tree.size(); ++n) {
      int a = at.tree.nodes[n].symbol;
      m_per_symbol[a] = std::max(m_per_symbol[a], at.states[n] + 1);
    }
  }

  std::unordered_map<int64_t, int64_t> root_count;
  std::map<std::tuple<int, int, int, int, int, int>, int64_t> binary_count;
  std::unordered_map<int64_t, int64_t> binary_parent;
  std::map<std::tuple<int, int, int>, int64_t> lex_count;
  std::unordered_map<int64_t, int64_t> lex_parent;
  std::unordered_map<int, int64_t> word_freq;

  for (const AnnotatedTree& at : treebank) {
    const SkeletalTree& t = at.tree;
    ++root_count[pack2(t.nodes[t.root()].symbol, at.states[t.root()])];
    for (int n = 0; n < t.size(); ++n) {
      const auto& node = t.nodes[n];
      int h = at.states[n];
      if (node.is_preterminal()) {
        ++lex_count[{node.symbol, h, node.word}];
        ++lex_parent[pack2(node.symbol, h)];
        ++word_freq[node.word];
      } else {
        ++binary_count[{node.symbol, h, t.nodes[node.left].symbol,
                        at.states[node.left], t.nodes[node.right].symbol,
                        at.states[node.right]}];
        ++binary_parent[pack2(node.symbol, h)];
      }
    }
  }

  // Rare-word mass per (a, h, signature); drawn from the same lexical
  // counts so unseen words can back off at parse time.
  std::map<std::tuple<int, int, std::string>, int64_t> sig_count;
  if (signature_backoff) {
    for (const auto& [key, n] : lex_count) {
      auto [a, h, w] = key;
      if (word_freq[w] < rare_word_threshold) {
        std::string sig = word_signature(symbols.word_name(w));
        sig_count[{a, h, sig}] += n;
        // coarse class, so unseen shapes still have a fallback
        if (sig != "UNK") sig_count[{a, h, "UNK"}] += n;
      }
    }
  }

  GrammarBuilder builder(symbols);
  for (int a = 0; a < symbols.num_symbols(); ++a) builder.set_states(a, m_per_symbol[a]);

  const double num_trees = static_cast<double>(treebank.size());
  std::vector<std::pair<int64_t, int64_t>> roots(root_count.begin(), root_count.end());
  std::sort(roots.begin(), roots.end());
  for (const auto& [key, n] : roots) {
    builder.add_root(static_cast<int>(key >> 32),
                     static_cast<int>(key & 0xffffffff),
                     static_cast<double>(n) / num_trees);
  }
  for (const auto& [key, n] : binary_count) {
    auto [a, h1, b, h2, c, h3] = key;
    builder.add_binary(a, h1, b, h2, c, h3,
                       static_cast<double>(n) /
                           static_cast<double>(binary_parent[pack2(a, h1)]));
  }
  for (const auto& [key, n] : lex_count) {
    auto [a, h, w] = key;
    builder.add_lexical(a, h, w,
                        static_cast<double>(n) /
                            static_cast<double>(lex_parent[pack2(a, h)]));
  }
  for (const auto& [key, n] : sig_count) {
    auto [a, h, sig] = key;
    builder.add_signature(a, h, sig,
                          static_cast<double>(n) /
                              static_cast<double>(lex_parent[pack2(a, h)]));
  }
  return builder.freeze();
}

TrainResult train_clustering(const std::vector<SkeletalTree>& treebank,
                             const SymbolTable& symbols,
                             const TrainConfig& config) {
  if (treebank.empty()) throw Error("cannot train on an empty treebank");
  if (config.k < 1 || config.m < 1) throw ConfigError("k and m must be >= 1");
  config.noise.check();

  TrainResult result;
  std::vector<AnnotatedTree> annotated(treebank.size());
  for (size_t t = 0; t < treebank.size(); ++t) {
    annotated[t].tree = treebank[t];
    annotated[t].states.assign(treebank[t].size(), 0);
  }

  // With a single latent state the SVD and clustering are vacuous: every
  // node maps to state 0 whatever the features, seed, or noise.
  if (config.m > 1) {
    std::vector<InstanceRecord> instances = decompose(treebank);
    std::vector<SparseFeatureVector> inside(instances.size());
    std::vector<SparseFeatureVector> outside(instances.size());
    std::vector<int> blocks(instances.size());
    for (size_t i = 0; i < instances.size(); ++i) {
      const InstanceRecord& rec = instances[i];
      inside[i] = inside_features(treebank[rec.tree], symbols, config.heads,
                                  rec.node, result.inside_index, config.features);
      outside[i] = outside_features(treebank[rec.tree], symbols, config.heads,
                                    rec.node, result.outside_index, config.features);
      blocks[i] = rec.symbol;
    }
    result.inside_index.freeze();
    result.outside_index.freeze();

    auto apply_dropout = [&]() {
      if (config.noise.scheme == NoiseScheme::kDropout && config.noise.sigma > 0.0) {
        RandomSource rng(derive_seed(config.noise.seed, "dropout"));
        for (auto& v : inside) v = dropout_features(v, config.noise.sigma, rng);
        for (auto& v : outside) v = dropout_features(v, config.noise.sigma, rng);
      }
    };
    // Default: noise the raw indicators, then normalize the noised data.
    if (!config.dropout_after_normalization) apply_dropout();
    variance_normalize(inside, blocks, result.inside_index);
    variance_normalize(outside, blocks, result.outside_index);
    if (config.dropout_after_normalization) apply_dropout();

    CovarianceAccumulator omega =
        build_omega(instances, inside, outside, symbols.num_symbols());

    std::vector<int> block_symbols;
    for (const auto& [a, block] : omega.blocks) block_symbols.push_back(a);

    std::vector<std::vector<std::pair<size_t, int>>> states_by_block(
        block_symbols.size());
    parallel_for(
        static_cast<int>(block_symbols.size()),
        [&](int bi) {
          int a = block_symbols[bi];
          const CovarianceAccumulator::Block& block = omega.blocks.at(a);
          std::vector<size_t> members;
          for (size_t i = 0; i < instances.size(); ++i) {
            if (instances[i].symbol == a) members.push_back(i);
          }
          const std::string& name = symbols.symbol_name(a);
          int d_in = block.matrix.rows();
          int d_out = block.matrix.cols();
          int k_a = std::min(config.k, std::min(d_in, d_out));
          if (k_a < 1) {
            for (size_t i : members) states_by_block[bi].emplace_back(i, 0);
            return;
          }
          ProjectionPair proj =
              truncated_svd(block.matrix, k_a, derive_seed(config.seed, "svd-" + name));
          int rank = proj.rank();
          if (rank < 1) {
            for (size_t i : members) states_by_block[bi].emplace_back(i, 0);
            return;
          }

          std::unordered_map<int, int> in_local, out_local;
          for (size_t i = 0; i < block.inside_features.size(); ++i) {
            in_local[block.inside_features[i]] = static_cast<int>(i);
          }
          for (size_t i = 0; i < block.outside_features.size(); ++i) {
            out_local[block.outside_features[i]] = static_cast<int>(i);
          }

          RandomSource gauss_rng(derive_seed(config.noise.seed, "gauss-" + name));
          bool gaussian = (config.noise.scheme == NoiseScheme::kGaussianAdditive ||
                           config.noise.scheme == NoiseScheme::kGaussianMultiplicative) &&
                          config.noise.sigma > 0.0;
          Eigen::MatrixXd points(members.size(), 2 * rank);
          for (size_t mi = 0; mi < members.size(); ++mi) {
            size_t i = members[mi];
            Eigen::VectorXd y = Eigen::VectorXd::Zero(rank);
            Eigen::VectorXd z = Eigen::VectorXd::Zero(rank);
            for (const auto& [id, v] : inside[i].entries) {
              auto it = in_local.find(id);
              if (it != in_local.end()) y += v * proj.U.row(it->second).transpose();
            }
            for (const auto& [id, v] : outside[i].entries) {
              auto it = out_local.find(id);
              if (it != out_local.end()) z += v * proj.V.row(it->second).transpose();
            }
            if (config.scale_by_singular_values) {
              y = y.cwiseProduct(proj.singular_values);
              z = z.cwiseProduct(proj.singular_values);
            }
            Eigen::VectorXd x(2 * rank);
            x << y, z;
            if (gaussian) {
              x = gaussian_perturb(x, config.noise.sigma, config.noise.scheme,
                                   gauss_rng);
            }
            points.row(mi) = x;
          }

          ClusteringResult clusters = kmeans(
              points, config.m, config.restarts,
              derive_seed(config.seed, "kmeans-" + name));
          for (size_t mi = 0; mi < members.size(); ++mi) {
            states_by_block[bi].emplace_back(members[mi], clusters.assignment[mi]);
          }
        },
        config.threads);

    for (const auto& block_states : states_by_block) {
      for (const auto& [i, h] : block_states) {
        annotated[instances[i].tree].states[instances[i].node] = h;
      }
    }
  }

  result.grammar = estimate_from_annotated(annotated, symbols,
                                           config.signature_backoff,
                                           config.rare_word_threshold);
  result.annotated = std::move(annotated);
  return result;
}

LatentGrammar train_base_pcfg(const std::vector<SkeletalTree>& treebank,
                              const SymbolTable& symbols,
                              bool signature_backoff, int rare_word_threshold) {
  if (treebank.empty()) throw Error("cannot train on an empty treebank");
  std::vector<AnnotatedTree> annotated(treebank.size());
  for (size_t t = 0; t < treebank.size(); ++t) {
    annotated[t].tree = treebank[t];
    annotated[t].states.assign(treebank[t].size(), 0);
  }
  return estimate_from_annotated(annotated, symbols, signature_backoff,
                                 rare_word_threshold);
}

std::vector<EnsembleMember> train_ensemble(
    const std::vector<SkeletalTree>& treebank, const SymbolTable& symbols,
    const TrainConfig& base_config, const std::vector<EnsembleGridEntry>& grid) {
  if (grid.empty()) throw ConfigError("ensemble grid is empty");
  std::vector<EnsembleMember> members;
  for (const EnsembleGridEntry& entry : grid) {
    if (entry.replicates < 1) throw ConfigError("replicates must be >= 1");
    entry.spec.check();
    for (int r = 0; r < entry.replicates; ++r) {
      EnsembleMember m;
      m.scheme = entry.spec.scheme;
      m.sigma = entry.spec.sigma;
      m.replicate = r;
      m.seed = model_seed(base_config.seed, entry.spec.scheme, entry.spec.sigma, r);
      members.push_back(std::move(m));
    }
  }
  parallel_for(
      static_cast<int>(members.size()),
      [&](int i) {
        EnsembleMember& m = members[i];
        TrainConfig config = base_config;
        config.seed = m.seed;
        config.noise = NoiseSpec{m.scheme, m.sigma, m.seed};
        config.threads = 1;  // members already run in parallel
        try {
          m.result = train_clustering(treebank, symbols, config);
        } catch (const std::exception& e) {
          m.error = e.what();
        }
      },
      base_config.threads);
  return members;
}

}  // namespace lpcfg
