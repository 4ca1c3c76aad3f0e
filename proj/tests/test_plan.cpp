#include "doctest.h"
#include "helpers.hpp"
#include "triage/plan.hpp"

using namespace triage;

TEST_CASE("prompt embeds n, budget, problem blocks, schema, and ordering rule") {
    auto pool = test::reference_pool();
    std::string prompt = render_planner_prompt(pool, PromptVariant::NeutralA);
    CHECK(prompt.find("a set of 4 problems") != std::string::npos);
    CHECK(prompt.find("total budget of 500 output tokens") != std::string::npos);
    CHECK(prompt.find("must not exceed 500") != std::string::npos);
    CHECK(prompt.find("[id: q1] (points: 1)") != std::string::npos);
    CHECK(prompt.find("[id: q4] (points: 1)") != std::string::npos);
    CHECK(prompt.find("problem 3") != std::string::npos);
    CHECK(prompt.find("\"plan\": [") != std::string::npos);
    CHECK(prompt.find("{\"id\": <problem_id>, \"tokens\": <int>}") !=
          std::string::npos);
    CHECK(prompt.find("Output only the JSON object") != std::string::npos);
    CHECK(prompt.find("The order of items in \"plan\"") != std::string::npos);
}

TEST_CASE("variant openings differ, shared body identical") {
    auto pool = test::reference_pool();
    std::string a = render_planner_prompt(pool, PromptVariant::NeutralA);
    std::string b = render_planner_prompt(pool, PromptVariant::AgentB);
    std::string c = render_planner_prompt(pool, PromptVariant::ExamC);
    CHECK(b.find("autonomous planning agent") != std::string::npos);
    CHECK(c.find("timed exam") != std::string::npos);
    // everything from the rules block on is byte-identical
    auto tail = [](const std::string& s) {
        return s.substr(s.find("\nConstraints:"));
    };
    CHECK(tail(a) == tail(b));
    CHECK(tail(a) == tail(c));
}

TEST_CASE("rendering is deterministic") {
    auto pool = test::reference_pool();
    CHECK(render_planner_prompt(pool, PromptVariant::AgentB, "math problems") ==
          render_planner_prompt(pool, PromptVariant::AgentB, "math problems"));
}

TEST_CASE("well-formed plan parses without repair") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        R"({"plan":[{"id":"q1","tokens":200},{"id":"q2","tokens":300}]})", pool);
    CHECK(result.status == ParseStatus::Ok);
    REQUIRE(result.plan.entries.size() == 2);
    CHECK(result.plan.entries[0].problem_id == "q1");
    CHECK(result.plan.entries[0].tokens == 200);
    CHECK(result.plan.entries[1].problem_id == "q2");
    CHECK(result.plan.entries[1].tokens == 300);
}

TEST_CASE("surrounding prose is stripped") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        "Sure! Here is my plan: {\"plan\":[{\"id\":\"q1\",\"tokens\":120}]} Good luck.",
        pool);
    CHECK(result.status == ParseStatus::Repaired);
    REQUIRE(result.plan.entries.size() == 1);
    CHECK(result.plan.entries[0].problem_id == "q1");
    CHECK(result.plan.entries[0].tokens == 120);
}

TEST_CASE("markdown fencing is stripped") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        "```json\n{\"plan\":[{\"id\":\"q2\",\"tokens\":50}]}\n```", pool);
    CHECK(result.status == ParseStatus::Repaired);
    REQUIRE(result.plan.entries.size() == 1);
}

TEST_CASE("unknown ids are discarded") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        R"({"plan":[{"id":"zz","tokens":50},{"id":"q1","tokens":10}]})", pool);
    REQUIRE(result.plan.entries.size() == 1);
    CHECK(result.plan.entries[0].problem_id == "q1");
    CHECK(result.unknown_dropped == 1);
}

TEST_CASE("negative tokens clamp to zero and drop as unselected") {
    auto pool = test::reference_pool();
    auto result =
        parse_and_repair(R"({"plan":[{"id":"q1","tokens":-50}]})", pool);
    CHECK(result.status == ParseStatus::Repaired);
    CHECK(result.plan.entries.empty());
    CHECK(result.nonpositive_dropped == 1);
}

TEST_CASE("fractional tokens floor") {
    auto pool = test::reference_pool();
    auto result =
        parse_and_repair(R"({"plan":[{"id":"q1","tokens":99.9}]})", pool);
    REQUIRE(result.plan.entries.size() == 1);
    CHECK(result.plan.entries[0].tokens == 99);
}

TEST_CASE("duplicate ids keep the first occurrence") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        R"({"plan":[{"id":"q1","tokens":10},{"id":"q1","tokens":20}]})", pool);
    REQUIRE(result.plan.entries.size() == 1);
    CHECK(result.plan.entries[0].tokens == 10);
    CHECK(result.duplicate_dropped == 1);
}

TEST_CASE("the first object with a plan key wins") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        R"({"note":"warmup"} {"plan":[{"id":"q3","tokens":5}]} {"plan":[{"id":"q4","tokens":9}]})",
        pool);
    REQUIRE(result.plan.entries.size() == 1);
    CHECK(result.plan.entries[0].problem_id == "q3");
}

TEST_CASE("a nested plan object is still found") {
    auto pool = test::reference_pool();
    auto result = parse_and_repair(
        R"({"result":{"plan":[{"id":"q2","tokens":42}]}})", pool);
    REQUIRE(result.plan.entries.size() == 1);
    CHECK(result.plan.entries[0].problem_id == "q2");
}

TEST_CASE("unrecoverable output is Unparseable") {
    auto pool = test::reference_pool();
    CHECK(parse_and_repair("I refuse to plan.", pool).status ==
          ParseStatus::Unparseable);
    CHECK(parse_and_repair("{\"tokens\": [1,2,3]}", pool).status ==
          ParseStatus::Unparseable);
    CHECK(parse_and_repair("", pool).status == ParseStatus::Unparseable);
}

TEST_CASE("a plan of only discarded entries is parseable but empty") {
    auto pool = test::reference_pool();
    auto result =
        parse_and_repair(R"({"plan":[{"id":"nope","tokens":10}]})", pool);
    CHECK(result.status == ParseStatus::Repaired);
    CHECK(result.plan.entries.empty());
    auto report = validate_plan(result.plan, pool, &result);
    CHECK(report.empty);
    CHECK(report.unknown_count == 1);
}

TEST_CASE("repair is idempotent") {
    auto pool = test::reference_pool();
    const char* raws[] = {
        R"({"plan":[{"id":"q1","tokens":200},{"id":"q2","tokens":300}]})",
        "noise {\"plan\":[{\"id\":\"q4\",\"tokens\":17.5},{\"id\":\"q4\",\"tokens\":3}]} tail",
        R"({"plan":[{"id":"q1","tokens":-2},{"id":"q3","tokens":8,"note":"x"}]})",
    };
    for (const char* raw : raws) {
        auto once = parse_and_repair(raw, pool);
        REQUIRE(once.status != ParseStatus::Unparseable);
        auto twice = parse_and_repair(plan_to_json(once.plan), pool);
        CHECK(twice.status == ParseStatus::Ok);
        CHECK(plan_to_json(twice.plan) == plan_to_json(once.plan));
    }
}

TEST_CASE("serialize-parse honesty is byte exact") {
    auto pool = test::reference_pool();
    Plan plan;
    plan.entries = {{"q2", 123}, {"q1", 7}};
    std::string text = plan_to_json(plan);
    CHECK(text == R"({"plan":[{"id":"q2","tokens":123},{"id":"q1","tokens":7}]})");
    auto parsed = parse_and_repair(text, pool);
    CHECK(parsed.status == ParseStatus::Ok);
    CHECK(plan_to_json(parsed.plan) == text);
}

TEST_CASE("validate_plan reports but never rejects") {
    auto pool = test::reference_pool();
    Plan over;
    over.entries = {{"q1", 400}, {"q2", 300}};
    auto report = validate_plan(over, pool);
    CHECK(report.sum_allocations == 700);
    CHECK_FALSE(report.within_budget);

    Plan fits;
    fits.entries = {{"q1", 200}, {"q2", 300}};
    CHECK(validate_plan(fits, pool).within_budget);

    Plan empty;
    auto er = validate_plan(empty, pool);
    CHECK(er.sum_allocations == 0);
    CHECK(er.within_budget);
    CHECK(er.empty);
}
