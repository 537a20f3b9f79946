// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/models/backend.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "promptforge/core/error.hpp"
#include "promptforge/core/random.hpp"
#include "promptforge/core/registry.hpp"

namespace promptforge::models {

using nlohmann::json;

Eigen::MatrixXd DifferentiableBackend::embed(std::span<const int> ids) const {
  const auto& table = embedding_table();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw IndexError("token id " + std::to_string(ids[i]) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

TinyReferenceBackend::TinyReferenceBackend(ModelRef model, CharTokenizer tokenizer,
                                           TinyTransformerConfig config,
                                           TinyTransformerWeights<double> weights)
    : model_(std::move(model)), tokenizer_(std::move(tokenizer)), net_(config, std::move(weights)) {
  if (tokenizer_.vocab_size() != config.vocab_size) {
    throw ValidationError("vocab_size", "tokenizer alphabet does not match model vocabulary");
  }
  if (config.d_model % config.n_heads != 0) {
    throw ValidationError("n_heads", "d_model must be divisible by n_heads");
  }
}

Eigen::MatrixXd TinyReferenceBackend::logits(const Eigen::MatrixXd& input_embeddings) const {
  count_forward();
  return net_.forward(input_embeddings);
}

InputGradient TinyReferenceBackend::differentiate(const Eigen::MatrixXd& input_embeddings,
                                                  const LogitObjective& objective) const {
  count_forward();
  TinyTransformer<double>::Tape tape;
  const Eigen::MatrixXd out = net_.forward(input_embeddings, &tape);
  auto [loss, dlogits] = objective(out);
  return {loss, net_.backward(tape, dlogits)};
}

std::vector<int> TinyReferenceBackend::generate(std::span<const int> context,
                                                const DecodeOptions& options) const {
  std::vector<int> generated;
  if (options.max_new_tokens <= 0) return generated;
  count_forward();
  const auto& table = net_.weights().token_embedding;
  TinyTransformer<double>::Decoder decoder(net_);
  Eigen::RowVectorXd last;
  for (int id : context) {
    if (id < 0 || id >= table.rows()) throw IndexError("token id out of range");
    last = decoder.push(table.row(id));
  }
  if (context.empty()) throw IndexError("generation requires a non-empty context");
  Rng rng(options.seed);
  for (int step = 0; step < options.max_new_tokens; ++step) {
    int next = 0;
    if (options.temperature <= 0.0) {
      last.maxCoeff(&next);  // first maximum on ties
    } else {
      Eigen::RowVectorXd p = ((last.array() - last.maxCoeff()) / options.temperature).exp();
      p /= p.sum();
      double u = rng.uniform01();
      next = static_cast<int>(p.size()) - 1;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        u -= p(i);
        if (u < 0.0) {
          next = static_cast<int>(i);
          break;
        }
      }
    }
    generated.push_back(next);
    if (options.should_stop && options.should_stop(generated)) break;
    if (step + 1 < options.max_new_tokens) last = decoder.push(table.row(next));
  }
  return generated;
}

TinyReferenceBackend tiny_reference_model(std::uint64_t seed) {
  TinyTransformerConfig cfg;
  ModelRef ref;
  ref.kind = ModelKind::local;
  ref.identifier = "tiny-reference-seed-" + std::to_string(seed);
  return TinyReferenceBackend(ref, CharTokenizer(CharTokenizer::default_alphabet()), cfg,
                              init_tiny_weights(cfg, seed));
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols,
                            const std::string& name) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw ValidationError(name, "tensor shape does not match the model config");
  }
  const auto& data = j.at("data");
  if (data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ValidationError(name, "tensor has the wrong number of values");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  return m;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void save_tiny_model(const TinyReferenceBackend& model, std::uint64_t seed,
                     const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto& cfg = model.network().config();
  write_json_file(dir / "config.json", json{{"architecture", "tiny-char-decoder"},
                                            {"vocab_size", cfg.vocab_size},
                                            {"d_model", cfg.d_model},
                                            {"n_layers", cfg.n_layers},
                                            {"n_heads", cfg.n_heads},
                                            {"d_hidden", cfg.d_hidden},
                                            {"norm_eps", cfg.norm_eps},
                                            {"alphabet", model.tokenizer().alphabet()},
                                            {"seed", seed}});
  const auto& w = model.network().weights();
  json layers = json::array();
  for (const auto& l : w.layers) {
    layers.push_back({{"attn_norm", matrix_json(l.attn_norm)},
                      {"wq", matrix_json(l.wq)},
                      {"wk", matrix_json(l.wk)},
                      {"wv", matrix_json(l.wv)},
                      {"wo", matrix_json(l.wo)},
                      {"mlp_norm", matrix_json(l.mlp_norm)},
                      {"w1", matrix_json(l.w1)},
                      {"b1", matrix_json(l.b1)},
                      {"w2", matrix_json(l.w2)},
                      {"b2", matrix_json(l.b2)}});
  }
  write_json_file(dir / "weights.json", json{{"token_embedding", matrix_json(w.token_embedding)},
                                             {"layers", layers},
                                             {"final_norm", matrix_json(w.final_norm)},
                                             {"unembedding", matrix_json(w.unembedding)}});
}

std::unique_ptr<TinyReferenceBackend> load_local_model(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("local model path '" + dir.string() + "' is not a directory");
  }
  const json cj = read_json_file(dir / "config.json");
  const json wj = read_json_file(dir / "weights.json");
  try {
    if (cj.at("architecture").get<std::string>() != "tiny-char-decoder") {
      throw ValidationError("architecture", "unsupported local model architecture");
    }
    TinyTransformerConfig cfg;
    cfg.vocab_size = cj.at("vocab_size").get<int>();
    cfg.d_model = cj.at("d_model").get<int>();
    cfg.n_layers = cj.at("n_layers").get<int>();
    cfg.n_heads = cj.at("n_heads").get<int>();
    cfg.d_hidden = cj.at("d_hidden").get<int>();
    cfg.norm_eps = cj.at("norm_eps").get<double>();
    TinyTransformerWeights<double> w;
    const Eigen::Index v = cfg.vocab_size, d = cfg.d_model, h = cfg.d_hidden;
    w.token_embedding = matrix_from(wj.at("token_embedding"), v, d, "token_embedding");
    const auto& layers = wj.at("layers");
    if (layers.size() != static_cast<std::size_t>(cfg.n_layers)) {
      throw ValidationError("layers", "layer count does not match the model config");
    }
    for (const auto& lj : layers) {
      TinyTransformerWeights<double>::Layer l;
      l.attn_norm = matrix_from(lj.at("attn_norm"), d, 1, "attn_norm");
      l.wq = matrix_from(lj.at("wq"), d, d, "wq");
      l.wk = matrix_from(lj.at("wk"), d, d, "wk");
      l.wv = matrix_from(lj.at("wv"), d, d, "wv");
      l.wo = matrix_from(lj.at("wo"), d, d, "wo");
      l.mlp_norm = matrix_from(lj.at("mlp_norm"), d, 1, "mlp_norm");
      l.w1 = matrix_from(lj.at("w1"), d, h, "w1");
      l.b1 = matrix_from(lj.at("b1"), h, 1, "b1");
      l.w2 = matrix_from(lj.at("w2"), h, d, "w2");
      l.b2 = matrix_from(lj.at("b2"), d, 1, "b2");
      w.layers.push_back(std::move(l));
    }
    w.final_norm = matrix_from(wj.at("final_norm"), d, 1, "final_norm");
    w.unembedding = matrix_from(wj.at("unembedding"), v, d, "unembedding");
    ModelRef ref;
    ref.kind = ModelKind::local;
    ref.identifier = dir.string();
    return std::make_unique<TinyReferenceBackend>(
        ref, CharTokenizer(cj.at("alphabet").get<std::string>()), cfg, std::move(w));
  } catch (const json::exception& e) {
    throw IoError("malformed local model in '" + dir.string() + "': " + e.what());
  }
}

namespace {

void check_layout(std::size_t sequence_len, PromptSpan span, std::size_t answer_position,
                  std::span<const int> gold) {
  if (!(span.start < span.end && span.end <= answer_position)) {
    throw IndexError("prompt span [" + std::to_string(span.start) + ", " +
                     std::to_string(span.end) + ") is empty or extends past the answer position");
  }
  if (answer_position < 1 || answer_position > sequence_len) {
    throw IndexError("answer position " + std::to_string(answer_position) +
                     " outside sequence of length " + std::to_string(sequence_len));
  }
  if (gold.empty()) throw IndexError("gold answer has no tokens");
}

// Context rows followed by the teacher-forced gold prefix.
Eigen::MatrixXd scored_sequence(const DifferentiableBackend& backend, const Eigen::MatrixXd& context,
                                std::span<const int> gold, std::size_t answer_position) {
  const auto n_ctx = static_cast<Eigen::Index>(answer_position);
  const auto n_gold = static_cast<Eigen::Index>(gold.size());
  Eigen::MatrixXd seq(n_ctx + n_gold - 1, context.cols());
  seq.topRows(n_ctx) = context.topRows(n_ctx);
  if (n_gold > 1) seq.bottomRows(n_gold - 1) = backend.embed(gold.first(gold.size() - 1));
  return seq;
}

}  // namespace

ForwardLossResult forward_loss(const DifferentiableBackend& backend,
                               const Eigen::MatrixXd& context_embeddings, PromptSpan span,
                               std::span<const int> gold, std::size_t answer_position,
                               std::string_view loss_name) {
  check_layout(static_cast<std::size_t>(context_embeddings.rows()), span, answer_position, gold);
  if (context_embeddings.cols() != backend.embedding_dim()) {
    throw IndexError("context embeddings have the wrong width");
  }
  const Loss& loss = LossRegistry::global().resolve(loss_name);
  const Eigen::MatrixXd seq = scored_sequence(backend, context_embeddings, gold, answer_position);
  const auto first = static_cast<Eigen::Index>(answer_position) - 1;
  const auto n_gold = static_cast<Eigen::Index>(gold.size());

  InputGradient g = backend.differentiate(seq, [&](const Eigen::MatrixXd& logits) {
    const Eigen::MatrixXd answer_logits = logits.middleRows(first, n_gold);
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    dlogits.middleRows(first, n_gold) = loss.gradient(answer_logits, gold);
    return std::make_pair(loss.value(answer_logits, gold), std::move(dlogits));
  });
  return {g.loss, g.input_grad.middleRows(static_cast<Eigen::Index>(span.start),
                                          static_cast<Eigen::Index>(span.size()))};
}

ForwardLossResult forward_loss(const DifferentiableBackend& backend, std::span<const int> input_ids,
                               PromptSpan span, std::span<const int> gold,
                               std::size_t answer_position, std::string_view loss_name) {
  check_layout(input_ids.size(), span, answer_position, gold);
  return forward_loss(backend, backend.embed(input_ids.first(answer_position)), span, gold,
                      answer_position, loss_name);
}

double evaluate_loss(const DifferentiableBackend& backend, const Eigen::MatrixXd& context_embeddings,
                     std::span<const int> gold, std::size_t answer_position,
                     std::string_view loss_name) {
  if (answer_position < 1 || answer_position > static_cast<std::size_t>(context_embeddings.rows())) {
    throw IndexError("answer position outside sequence");
  }
  if (gold.empty()) throw IndexError("gold answer has no tokens");
  const Loss& loss = LossRegistry::global().resolve(loss_name);
  const Eigen::MatrixXd seq = scored_sequence(backend, context_embeddings, gold, answer_position);
  const Eigen::MatrixXd logits = backend.logits(seq);
  return loss.value(logits.middleRows(static_cast<Eigen::Index>(answer_position) - 1,
                                      static_cast<Eigen::Index>(gold.size())),
                    gold);
}

double evaluate_loss(const DifferentiableBackend& backend, std::span<const int> input_ids,
                     std::span<const int> gold, std::size_t answer_position,
                     std::string_view loss_name) {
  if (answer_position < 1 || answer_position > input_ids.size()) {
    throw IndexError("answer position outside sequence");
  }
  return evaluate_loss(backend, backend.embed(input_ids.first(answer_position)), gold,
                       answer_position, loss_name);
}

}  // namespace promptforge::models
