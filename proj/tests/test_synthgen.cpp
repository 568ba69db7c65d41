#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "spanbench/corpus.hpp"
#include "spanbench/errors.hpp"
#include "spanbench/synthgen.hpp"

using namespace spanbench;
using nlohmann::json;

namespace {

Document doc_of(const std::string& text, const std::string& id = "d1") {
  return ingest_document(text, id);
}

std::string answers_json(const std::vector<std::pair<std::string, std::vector<std::string>>>& items) {
  json arr = json::array();
  for (const auto& [question, excerpts] : items) {
    arr.push_back({{"question", question}, {"excerpts", excerpts}});
  }
  return arr.dump();
}

}  // namespace

TEST_CASE("anchor_excerpt finds verbatim spans") {
  const Document doc = doc_of("alpha beta gamma");
  const auto r = anchor_excerpt(doc, "beta");
  CHECK(r.span.start == 6);
  CHECK(r.span.end == 10);
  CHECK(r.span.excerpt == "beta");
  CHECK_FALSE(r.ambiguous);
  CHECK_NOTHROW(validate_span(doc, r.span));
}

TEST_CASE("anchor_excerpt tolerates reflowed whitespace") {
  const Document doc = doc_of("alpha beta gamma");
  const auto r = anchor_excerpt(doc, "beta  gamma");
  CHECK(r.span.start == 6);
  CHECK(r.span.end == 16);
  CHECK(r.span.excerpt == "beta gamma");

  const Document wrapped = doc_of("one two\n  three");
  const auto w = anchor_excerpt(wrapped, "two three");
  CHECK(w.span.excerpt == "two\n  three");
  CHECK_NOTHROW(validate_span(wrapped, w.span));
}

TEST_CASE("anchor_excerpt trims excerpt edges and reports misses") {
  const Document doc = doc_of("alpha beta gamma");
  const auto r = anchor_excerpt(doc, "  beta ");
  CHECK(r.span.excerpt == "beta");
  CHECK_THROWS_AS(anchor_excerpt(doc, "delta"), AnchorNotFound);
  CHECK_THROWS_AS(anchor_excerpt(doc, "   "), AnchorNotFound);
  CHECK_THROWS_AS(anchor_excerpt(doc, ""), std::invalid_argument);
}

TEST_CASE("anchor_excerpt matches inside words and flags ambiguity") {
  const Document doc = doc_of("the betamax and the beta");
  const auto r = anchor_excerpt(doc, "beta");
  CHECK(r.span.start == 4);  // first occurrence wins, inside "betamax"
  CHECK(r.ambiguous);

  const Document uniq = doc_of("plain unrepeated text");
  CHECK_FALSE(anchor_excerpt(uniq, "unrepeated").ambiguous);
}

TEST_CASE("anchor_excerpt works with scalar offsets past multibyte chars") {
  const Document doc = doc_of("Pas\xc3\xa9o kiln runs");
  const auto r = anchor_excerpt(doc, "kiln");
  CHECK(r.span.start == 6);
  CHECK(r.span.end == 10);
  CHECK_NOTHROW(validate_span(doc, r.span));
}

TEST_CASE("dedupe folds case and whitespace") {
  QAPair a;
  a.question = "What is X?";
  QAPair b;
  b.question = "what is  x?";
  QAPair c;
  c.question = "What is Y?";
  auto out = dedupe({a, b, c});
  REQUIRE(out.size() == 2);
  CHECK(out[0].question == "What is X?");
  CHECK(out[1].question == "What is Y?");
  CHECK(dedupe({}).empty());
}

TEST_CASE("think segments are stripped, fenced JSON is extracted") {
  const std::string content =
      "<think>I should quote the kiln sentence.</think>\n"
      "Here you go:\n```json\n[{\"question\": \"Q1?\", \"excerpts\": [\"beta\"]}]\n```";
  const std::string visible = strip_think_segments(content);
  CHECK(visible.find("<think>") == std::string::npos);
  const auto arr = extract_first_json_array(visible);
  REQUIRE(arr.has_value());
  CHECK(json::parse(*arr).size() == 1);

  CHECK(strip_think_segments("a<think>x") == "a");  // unterminated -> dropped
  CHECK_FALSE(extract_first_json_array("no array here [1,").has_value());
  // the bracket inside a string must not confuse the extractor
  const auto tricky = extract_first_json_array("pre [\"a]\", \"b\"] post");
  REQUIRE(tricky.has_value());
  CHECK(*tricky == "[\"a]\", \"b\"]");
}

TEST_CASE("generate_qa anchors excerpts from a scripted provider") {
  const Document doc = doc_of("alpha beta gamma delta epsilon");

  SUBCASE("two valid answers, zero rejections") {
    ScriptedChatProvider provider({answers_json({
        {"What comes after alpha?", {"beta"}},
        {"What is at the end?", {"epsilon"}},
    })});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 2;
    request.timestamp = "2024-06-01T00:00:00Z";
    const auto result = generate_qa(provider, request, 0);
    REQUIRE(result.pairs.size() == 2);
    CHECK(result.report.rejections.empty());
    CHECK(result.report.parsed_answers == 2);
    CHECK(result.pairs[0].query_id == "d1-q1");
    CHECK(result.pairs[0].provenance.kind == Provenance::Kind::synthetic);
    CHECK(result.pairs[0].provenance.model == "scripted");
    CHECK(result.pairs[0].provenance.timestamp == "2024-06-01T00:00:00Z");
    for (const auto& p : result.pairs) {
      for (const auto& s : p.spans) CHECK_NOTHROW(validate_span(doc, s));
    }
  }

  SUBCASE("fabricated excerpt rejects the whole answer") {
    ScriptedChatProvider provider({answers_json({
        {"Good one?", {"gamma"}},
        {"Bad one?", {"zeta"}},  // not in the document
    })});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 2;
    const auto result = generate_qa(provider, request, 0);
    REQUIRE(result.pairs.size() == 1);
    REQUIRE(result.report.rejections.size() == 1);
    CHECK(result.report.rejections[0].reason == "unanchorable");
    CHECK(result.report.rejections[0].detail == "zeta");
    CHECK(result.pairs.size() + result.report.rejections.size() ==
          result.report.parsed_answers);
  }

  SUBCASE("multi-hop answer keeps discontinuous spans") {
    ScriptedChatProvider provider({answers_json({
        {"Two places?", {"alpha", "delta"}},
    })});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 1;
    const auto result = generate_qa(provider, request, 0);
    REQUIRE(result.pairs.size() == 1);
    REQUIRE(result.pairs[0].spans.size() == 2);
    CHECK(result.pairs[0].spans[0].excerpt == "alpha");
    CHECK(result.pairs[0].spans[1].excerpt == "delta");
    CHECK(result.pairs[0].spans[0].end < result.pairs[0].spans[1].start);
  }

  SUBCASE("duplicate questions are rejected with accounting") {
    ScriptedChatProvider provider({answers_json({
        {"Same thing?", {"beta"}},
        {"same  THING?", {"gamma"}},
    })});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 2;
    const auto result = generate_qa(provider, request, 0);
    CHECK(result.pairs.size() == 1);
    REQUIRE(result.report.rejections.size() == 1);
    CHECK(result.report.rejections[0].reason == "duplicate");
  }

  SUBCASE("surplus answers beyond num_questions are accounted") {
    ScriptedChatProvider provider({answers_json({
        {"One?", {"alpha"}},
        {"Two?", {"beta"}},
        {"Three?", {"gamma"}},
    })});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 2;
    const auto result = generate_qa(provider, request, 0);
    CHECK(result.pairs.size() == 2);
    REQUIRE(result.report.rejections.size() == 1);
    CHECK(result.report.rejections[0].reason == "surplus");
  }

  SUBCASE("retry tops up after a short first answer") {
    ScriptedChatProvider provider({
        answers_json({{"One?", {"alpha"}}}),
        answers_json({{"Two?", {"beta"}}}),
    });
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 2;
    const auto result = generate_qa(provider, request, 1);
    CHECK(result.pairs.size() == 2);
    CHECK(result.report.attempts == 2);
  }

  SUBCASE("unparseable output raises MalformedModelOutput") {
    ScriptedChatProvider provider({"total nonsense", "still nonsense"});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 1;
    CHECK_THROWS_AS(generate_qa(provider, request, 1), MalformedModelOutput);
  }

  SUBCASE("all answers fabricated raises ZeroYield") {
    ScriptedChatProvider provider({answers_json({{"Bad?", {"omega"}}})});
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 1;
    CHECK_THROWS_AS(generate_qa(provider, request, 0), ZeroYield);
  }

  SUBCASE("identical scripts produce identical datasets") {
    const std::string script = answers_json({
        {"What comes after alpha?", {"beta"}},
        {"Span two?", {"gamma delta"}},
    });
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = 2;
    request.timestamp = "t";
    ScriptedChatProvider p1({script}), p2({script});
    const auto r1 = generate_qa(p1, request, 0);
    const auto r2 = generate_qa(p2, request, 0);
    CHECK(save_qa_dataset(r1.pairs) == save_qa_dataset(r2.pairs));
  }
}

TEST_CASE("generate_qa merges overlapping excerpts within one answer") {
  const Document doc = doc_of("one two three four");
  ScriptedChatProvider provider({answers_json({
      {"Overlap?", {"one two", "two three"}},
  })});
  GenerationRequest request;
  request.doc = doc;
  request.num_questions = 1;
  const auto result = generate_qa(provider, request, 0);
  REQUIRE(result.pairs.size() == 1);
  REQUIRE(result.pairs[0].spans.size() == 1);
  CHECK(result.pairs[0].spans[0].excerpt == "one two three");
}

TEST_CASE("ambiguous anchors emit a warning but still anchor first") {
  const Document doc = doc_of("echo data echo data");
  ScriptedChatProvider provider({answers_json({{"Where?", {"echo data"}}})});
  GenerationRequest request;
  request.doc = doc;
  request.num_questions = 1;
  const auto result = generate_qa(provider, request, 0);
  REQUIRE(result.pairs.size() == 1);
  CHECK(result.pairs[0].spans[0].start == 0);
  REQUIRE(result.report.warnings.size() == 1);
}

TEST_CASE("prompt templates are versioned and substituted") {
  const auto& tmpl = prompt_template("qa-v1");
  CHECK(tmpl.id == "qa-v1");
  CHECK(tmpl.user.find("{document}") != std::string::npos);
  CHECK_THROWS_AS(prompt_template("nope"), ConfigError);
}
