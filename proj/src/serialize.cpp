#include "mmvae/serialize.hpp"

#include <algorithm>
#include <json.hpp>
#include <stdexcept>

namespace mmvae {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string coeff_text(const Rational& c) { return c.str(); }

// Text and LaTeX list reconstruction terms first, then prior terms, then
// cross terms; within a group terms keep canonical (mask, modality) order.
std::vector<const LossTerm*> display_order(const LossExpression& expr) {
  std::vector<const LossTerm*> out;
  for (TermKind kind : {TermKind::Recon, TermKind::PriorKL, TermKind::CrossKL}) {
    for (const LossTerm& t : expr.terms) {
      if (t.kind == kind) out.push_back(&t);
    }
  }
  return out;
}

std::string render_text(const LossExpression& expr) {
  const SubsetMask full = expr.set.full_mask();
  std::string out;
  for (const LossTerm* t : display_order(expr)) {
    if (!out.empty()) out += ' ';
    out += term_sign(t->kind) > 0 ? "+" : "−";
    out += coeff_text(t->coeff);
    out += "·";
    const std::string subset = expr.set.subset_label(t->subset);
    switch (t->kind) {
      case TermKind::Recon:
        out += "E[log p(" + expr.set.modality(t->modality).name + "|z";
        if (t->subset != full) out += "_" + subset;
        out += ")]";
        break;
      case TermKind::PriorKL:
        out += "KL(q(z|" + subset + ")‖p(z))";
        break;
      case TermKind::CrossKL:
        out += "KL(q(z|" + subset + ")‖q(z|" + expr.set.subset_label(cross_reference(*t)) + "))";
        break;
    }
  }
  return out;
}

std::string latex_coeff(const Rational& c) {
  if (c.den() == 1) return std::to_string(c.num());
  return "\\tfrac{" + std::to_string(c.num()) + "}{" + std::to_string(c.den()) + "}";
}

std::string render_latex(const LossExpression& expr) {
  std::string out = "\\mathcal{L} =";
  for (const LossTerm* t : display_order(expr)) {
    out += term_sign(t->kind) > 0 ? " + " : " - ";
    out += latex_coeff(t->coeff) + " \\, ";
    const std::string subset = expr.set.subset_label(t->subset);
    switch (t->kind) {
      case TermKind::Recon:
        out += "\\mathbb{E}_{q(z \\mid " + subset + ")}\\left[\\log p(" +
               expr.set.modality(t->modality).name + " \\mid z)\\right]";
        break;
      case TermKind::PriorKL:
        out += "D_{\\mathrm{KL}}\\left(q(z \\mid " + subset + ") \\,\\|\\, p(z)\\right)";
        break;
      case TermKind::CrossKL:
        out += "D_{\\mathrm{KL}}\\left(q(z \\mid " + subset + ") \\,\\|\\, q(z \\mid " +
               expr.set.subset_label(cross_reference(*t)) + ")\\right)";
        break;
    }
  }
  return out;
}

ordered_json subset_names(const LossExpression& expr, SubsetMask mask) {
  ordered_json names = ordered_json::array();
  for (int i : expr.set.members(mask)) names.push_back(expr.set.modality(i).name);
  return names;
}

std::string render_json(const LossExpression& expr) {
  ordered_json doc;
  doc["variant"] = to_string(expr.variant);
  doc["latent_dim"] = expr.set.latent_dim();
  doc["modalities"] = ordered_json::array();
  for (const Modality& m : expr.set.modalities()) {
    doc["modalities"].push_back(
        {{"name", m.name}, {"dim", m.data_dim}, {"likelihood", to_string(m.likelihood)}});
  }
  doc["terms"] = ordered_json::array();
  for (const LossTerm& t : expr.terms) {
    ordered_json term;
    term["kind"] = to_string(t.kind);
    term["subset"] = subset_names(expr, t.subset);
    if (t.kind == TermKind::Recon) term["target"] = expr.set.modality(t.modality).name;
    if (t.kind == TermKind::CrossKL) term["dropped"] = expr.set.modality(t.modality).name;
    term["coeff"] = coeff_text(t.coeff);
    doc["terms"].push_back(std::move(term));
  }
  return doc.dump(2);
}

SubsetMask mask_from_names(const ModalitySet& set, const ordered_json& names) {
  if (!names.is_array() || names.empty()) {
    throw semantic_error("term subset must be a nonempty array of modality names");
  }
  SubsetMask mask = 0;
  for (const auto& name : names) {
    const int idx = set.index_of(name.get<std::string>());
    if (idx < 0) throw semantic_error("unknown modality in subset: " + name.get<std::string>());
    mask |= subset_bit(idx);
  }
  return mask;
}

}  // namespace

std::string render(const LossExpression& expr, RenderFormat format) {
  switch (format) {
    case RenderFormat::Text: return render_text(expr);
    case RenderFormat::Json: return render_json(expr);
    case RenderFormat::Latex: return render_latex(expr);
  }
  throw std::logic_error("unreachable render format");
}

LossExpression parse_expression(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(e.what(), e.byte);
  }

  try {
    const Variant variant = variant_from_string(doc.at("variant").get<std::string>());
    std::vector<Modality> modalities;
    for (const auto& m : doc.at("modalities")) {
      modalities.push_back({m.at("name").get<std::string>(), m.at("dim").get<int>(),
                            likelihood_from_string(m.at("likelihood").get<std::string>())});
    }
    ModalitySet set(std::move(modalities), doc.at("latent_dim").get<int>());

    std::vector<LossTerm> terms;
    for (const auto& t : doc.at("terms")) {
      LossTerm term;
      term.kind = term_kind_from_string(t.at("kind").get<std::string>());
      term.subset = mask_from_names(set, t.at("subset"));
      if (term.kind == TermKind::Recon) {
        term.modality = set.index_of(t.at("target").get<std::string>());
      } else if (term.kind == TermKind::CrossKL) {
        term.modality = set.index_of(t.at("dropped").get<std::string>());
      }
      term.coeff = Rational::parse(t.at("coeff").get<std::string>());
      terms.push_back(term);
    }
    return make_expression(variant, std::move(set), std::move(terms));
  } catch (const semantic_error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw semantic_error(std::string("expression document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw semantic_error(e.what());
  }
}

}  // namespace mmvae
