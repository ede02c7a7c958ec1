#include <doctest.h>

#include <json.hpp>
#include <string>

#include "mmvae/compiler.hpp"
#include "mmvae/serialize.hpp"

using namespace mmvae;

namespace {

ModalitySet ab_set() {
  return ModalitySet({{"a", 4, Likelihood::Gaussian}, {"b", 8, Likelihood::Bernoulli}}, 2);
}

}  // namespace

TEST_CASE("vanilla text rendering") {
  const auto e = expand_vanilla(ModalitySet({{"a", 4, Likelihood::Gaussian}}, 2));
  CHECK(render(e, RenderFormat::Text) ==
        "+1·E[log p(a|z)] −1·KL(q(z|a)‖p(z))");
}

TEST_CASE("m2vae text rendering annotates proper-subset encoders") {
  const auto e = expand_m2vae(ab_set());
  const std::string text = render(e, RenderFormat::Text);
  CHECK(text.find("+1/2·E[log p(a|z)]") != std::string::npos);      // full set
  CHECK(text.find("+1/2·E[log p(a|z_a)]") != std::string::npos);    // singleton
  CHECK(text.find("−1/2·KL(q(z|ab)‖q(z|b))") != std::string::npos);
}

TEST_CASE("m2vae bimodal json carries nine 1/2-weighted term records") {
  const auto e = expand_m2vae(ab_set());
  const auto doc = nlohmann::json::parse(render(e, RenderFormat::Json));
  REQUIRE(doc.at("terms").size() == 9);
  for (const auto& t : doc.at("terms")) CHECK(t.at("coeff").get<std::string>() == "1/2");
  CHECK(doc.at("variant") == "m2vae");
  CHECK(doc.at("modalities")[0].at("name") == "a");
  CHECK(doc.at("modalities")[1].at("likelihood") == "bernoulli");
}

TEST_CASE("json render/parse round trip is bytewise stable") {
  for (const LossExpression& e :
       {expand_vanilla(ModalitySet({{"a", 3, Likelihood::Gaussian}}, 2)), expand_joint(ab_set()),
        expand_jmvae(ab_set()),
        expand_jmvae3_style(ModalitySet({{"a", 2, Likelihood::Gaussian},
                                         {"b", 3, Likelihood::Bernoulli},
                                         {"c", 4, Likelihood::Gaussian}},
                                        5)),
        expand_m2vae(ab_set())}) {
    const std::string once = render(e, RenderFormat::Json);
    const LossExpression parsed = parse_expression(once);
    CHECK(parsed == e);
    CHECK(render(parsed, RenderFormat::Json) == once);
  }
}

TEST_CASE("truncated json raises a positioned parse error") {
  const std::string full = render(expand_m2vae(ab_set()), RenderFormat::Json);
  const std::string truncated = full.substr(0, full.size() / 2);
  try {
    parse_expression(truncated);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.position() > 0);
    CHECK(e.position() <= truncated.size() + 1);
  }
}

TEST_CASE("semantic violations are rejected after parsing") {
  const std::string base = render(expand_jmvae(ab_set()), RenderFormat::Json);

  SUBCASE("zero coefficient") {
    auto doc = nlohmann::ordered_json::parse(base);
    doc["terms"][0]["coeff"] = "0/3";
    CHECK_THROWS_AS(parse_expression(doc.dump()), semantic_error);
  }
  SUBCASE("unknown term kind") {
    auto doc = nlohmann::ordered_json::parse(base);
    doc["terms"][0]["kind"] = "entropy";
    CHECK_THROWS_AS(parse_expression(doc.dump()), semantic_error);
  }
  SUBCASE("unknown modality in subset") {
    auto doc = nlohmann::ordered_json::parse(base);
    doc["terms"][0]["subset"] = {"a", "zz"};
    CHECK_THROWS_AS(parse_expression(doc.dump()), semantic_error);
  }
  SUBCASE("missing required field") {
    auto doc = nlohmann::ordered_json::parse(base);
    doc.erase("variant");
    CHECK_THROWS_AS(parse_expression(doc.dump()), semantic_error);
  }
}

TEST_CASE("latex rendering is deterministic and fraction-formatted") {
  const auto e = expand_m2vae(ab_set());
  const std::string latex = render(e, RenderFormat::Latex);
  CHECK(latex == render(e, RenderFormat::Latex));
  CHECK(latex.find("\\tfrac{1}{2}") != std::string::npos);
  CHECK(latex.find("D_{\\mathrm{KL}}") != std::string::npos);
}
