#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"

namespace codecause::llm_eval {

std::string_view treatment_str(TreatmentId t) {
  switch (t) {
    case TreatmentId::control: return "control";
    case TreatmentId::T1: return "T1";
    case TreatmentId::T2: return "T2";
  }
  return "control";
}

TreatmentId treatment_from_str(std::string_view s) {
  if (s == "control") return TreatmentId::control;
  if (s == "T1") return TreatmentId::T1;
  if (s == "T2") return TreatmentId::T2;
  throw DataError("unknown treatment '" + std::string(s) + "'");
}

void TreatmentSpec::validate() const {
  const std::size_t want = id == TreatmentId::T2 ? 2 : 1;
  if (steps.size() != want) {
    throw UsageError("treatment " + std::string(treatment_str(id)) + " needs " + std::to_string(want) +
                     " prompt step(s), got " + std::to_string(steps.size()));
  }
}

TreatmentSpec TreatmentSpec::defaults(TreatmentId id) {
  switch (id) {
    case TreatmentId::control:
      return {id, {"Complete the following python method: ```{partial code}```"}};
    case TreatmentId::T1:
      return {id, {"Complete the following a Python code, return only code and complete method: ```{partial code}```"}};
    case TreatmentId::T2:
      // The first step and the closing instruction of the second are our own wording.
      return {id,
              {"The following is the description of a Python function: ```{docstring}```\n"
               "Complete the function, which starts with the following code: ```{partial code}```",
               "Remember you have a Python function named `{fun_name}`, the function starts with the following "
               "code `{code}`. The description for the function is: `{docstring}` Remove the comments from the "
               "code and optimize it. Return only the code of the complete method."}};
  }
  return {};
}

PromptInput prompt_input(const testbeds::TestbedPoint& tp) {
  PromptInput in;
  in.partial_code = tp.cut_prefix ? *tp.cut_prefix : tp.point.raw.code;
  in.fun_name = tp.point.raw.fun_name;
  in.docstring = tp.point.raw.docstring;
  return in;
}

namespace {

std::string fill(std::string_view tmpl, const PromptInput& in, TreatmentId id) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out += tmpl.substr(open);
      break;
    }
    const std::string_view key = tmpl.substr(open + 1, close - open - 1);
    if (key == "partial code" || key == "code") {
      out += in.partial_code;
    } else if (key == "fun_name") {
      out += in.fun_name;
    } else if (key == "docstring") {
      if (!in.docstring) {
        throw DataError("treatment " + std::string(treatment_str(id)) + " needs a docstring, '" + in.fun_name +
                        "' has none");
      }
      out += *in.docstring;
    } else {
      throw DataError("unknown prompt placeholder {" + std::string(key) + "}");
    }
    pos = close + 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> render_prompts(const PromptInput& input, const TreatmentSpec& treatment) {
  treatment.validate();
  std::vector<std::string> out;
  for (const std::string& step : treatment.steps) out.push_back(fill(step, input, treatment.id));
  return out;
}

}  // namespace codecause::llm_eval
