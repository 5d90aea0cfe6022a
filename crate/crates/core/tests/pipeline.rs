mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use chatlogic::bench::generate_instances;
use chatlogic::cwa::supplement;
use chatlogic::dsl::{format_program, GRAMMAR};
use chatlogic::llm::{
    classify_request, BackendConfig, ChatRequest, FaultKind, FaultProfile, LlmBackend, MockBackend, TaskTag,
    RETRY_PREFIX,
};
use chatlogic::logic::answer;
use chatlogic::nl::{Instance, NlFrontend, Pattern};
use chatlogic::pipeline::{Ablation, Comparator, Outcome, Pipeline, PipelineConfig};
use chatlogic::prompt::PromptSet;
use proptest::prelude::*;
use rand::seq::SliceRandom;

use common::{instance_of, nl_program, rng};

fn faulty(profile: FaultProfile, ablation: Ablation) -> PipelineConfig {
    PipelineConfig {
        backend: BackendConfig::faulty_mock(profile),
        ablation,
        ..PipelineConfig::default()
    }
}

fn sample(seed: u64, per_depth: usize) -> Vec<Instance> {
    let mut out = Vec::new();
    for depth in 2..=5 {
        let pattern = if seed.is_multiple_of(2) { Pattern::People } else { Pattern::Animal };
        out.extend(generate_instances(seed.wrapping_add(depth as u64), per_depth, depth, pattern));
    }
    out
}

fn executable(outcome: &Outcome) -> bool {
    outcome.answer().is_some()
}

fn translate_request(instance: &Instance, retry: u32) -> ChatRequest {
    let feedback = if retry == 0 {
        String::new()
    } else {
        format!("<feedback>\n{RETRY_PREFIX} {retry}\n</feedback>")
    };
    let slots: BTreeMap<String, String> = [
        ("facts", instance.facts.join("\n")),
        ("rules", instance.rules.join("\n")),
        ("question", instance.question.clone()),
        ("supplements", String::new()),
        ("dsl_grammar", GRAMMAR.to_string()),
        ("feedback", feedback),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    ChatRequest::new("m", PromptSet::builtin().render(TaskTag::Translate, &slots).unwrap())
}

fn repair_request(program: &str) -> ChatRequest {
    let slots = [("program_text", program), ("diagnostics", "1:1: syntax error")]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ChatRequest::new("m", PromptSet::builtin().render(TaskTag::Repair, &slots).unwrap())
}

fn kinds() -> impl Strategy<Value = Vec<FaultKind>> {
    prop::sample::subsequence(
        vec![
            FaultKind::DropStatement,
            FaultKind::RenamePredicate,
            FaultKind::FlipPolarity,
            FaultKind::BreakToken,
            FaultKind::UnsafeRule,
        ],
        1..=5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn syntax_faults_heal_after_k_repairs(seed in any::<u64>(), k in 0u32..4, inst_seed in any::<u64>()) {
        let nl = NlFrontend::default();
        let inst = &sample(inst_seed, 1)[0];
        let oracle = format_program(&nl.translate_instance(inst).unwrap()).text;
        let profile = FaultProfile {
            syntax_fault_rate: 1.0,
            semantic_fault_rate: 0.0,
            rng_seed: seed,
            faults_heal_after: Some(k),
            ..FaultProfile::default()
        };
        let mock = MockBackend::faulty(nl, profile, None);
        let mut reply = mock.complete(&translate_request(inst, 0)).unwrap();
        for i in 0..k {
            prop_assert_ne!(&reply, &oracle, "reply {} should still be corrupted", i);
            reply = mock.complete(&repair_request(&reply)).unwrap();
        }
        prop_assert_eq!(reply, oracle);
    }

    #[test]
    fn semantic_faults_heal_after_k_retranslations(seed in any::<u64>(), k in 0u32..4, inst_seed in any::<u64>()) {
        let nl = NlFrontend::default();
        let inst = &sample(inst_seed, 1)[1];
        let oracle = format_program(&nl.translate_instance(inst).unwrap()).text;
        let profile = FaultProfile {
            syntax_fault_rate: 1.0,
            semantic_fault_rate: 1.0,
            rng_seed: seed,
            faults_heal_after: Some(k),
            ..FaultProfile::default()
        };
        let mock = MockBackend::faulty(nl, profile, None);
        prop_assert_eq!(mock.complete(&translate_request(inst, k)).unwrap(), oracle);
    }

    #[test]
    fn ablation_stages_only_add_executability(
        seed in any::<u64>(),
        semantic in 0.0f64..=1.0,
        syntax in 0.0f64..=1.0,
        heal in prop::option::weighted(0.8, 0u32..4),
        kinds in kinds(),
    ) {
        let profile = FaultProfile {
            syntax_fault_rate: syntax,
            semantic_fault_rate: semantic,
            fault_kinds: kinds,
            rng_seed: seed,
            faults_heal_after: heal,
        };
        let runs: Vec<Pipeline> = Ablation::ALL
            .iter()
            .map(|&a| Pipeline::new(faulty(profile.clone(), a), NlFrontend::default()).unwrap())
            .collect();
        for inst in sample(seed, 3) {
            let ok: Vec<bool> = runs.iter().map(|p| executable(&p.run_instance(&inst).outcome)).collect();
            prop_assert!(ok[0] <= ok[1] && ok[1] <= ok[2], "{}: {:?}", inst.id, ok);
        }
    }

    #[test]
    fn traces_count_every_backend_call(seed in any::<u64>(), comparator in prop::sample::select(vec![Comparator::Llm, Comparator::Deterministic])) {
        let profile = FaultProfile {
            syntax_fault_rate: 0.5,
            semantic_fault_rate: 0.5,
            rng_seed: seed,
            faults_heal_after: Some(2),
            ..FaultProfile::default()
        };
        for inst in sample(seed, 1) {
            let config = PipelineConfig { comparator, ..faulty(profile.clone(), Ablation::SeSyn) };
            let pipeline = Pipeline::new(config, NlFrontend::default()).unwrap();
            let trace = pipeline.run_instance(&inst).trace;
            prop_assert_eq!(trace.backend_calls, pipeline.backend().calls());
            prop_assert_eq!(trace.exchanges().count() as u64, trace.backend_calls);
        }
    }

    #[test]
    fn perfect_mock_answers_like_the_oracle(seed in any::<u64>(), cwa in any::<bool>()) {
        let nl = NlFrontend::default();
        let program = nl_program(&mut rng(seed));
        let inst = instance_of(&nl, &program, "random");
        let config = PipelineConfig { cwa_enabled: cwa, ..PipelineConfig::default() };
        let pipeline = Pipeline::new(config, nl.clone()).unwrap();
        let oracle = nl.translate_instance(&inst).unwrap();
        let expected = if cwa { answer(&supplement(&oracle)) } else { answer(&oracle) };
        prop_assert_eq!(pipeline.run_instance(&inst).outcome.answer(), expected.ok());
    }

    #[test]
    fn rendering_is_pure_and_classifiable(values in prop::collection::vec(".{0,40}", 8)) {
        let prompts = PromptSet::builtin();
        for tag in TaskTag::ALL {
            let slots: BTreeMap<String, String> = prompts
                .get(tag)
                .slots
                .iter()
                .zip(values.iter().cycle())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            let a = prompts.render(tag, &slots).unwrap();
            prop_assert_eq!(&a, &prompts.render(tag, &slots).unwrap());
            prop_assert_eq!(classify_request(&ChatRequest::new("m", a)).unwrap(), tag);
        }
    }
}

#[test]
fn never_healing_faults_terminate_within_the_call_bound() {
    let profile = FaultProfile {
        syntax_fault_rate: 1.0,
        semantic_fault_rate: 1.0,
        faults_heal_after: None,
        rng_seed: 5,
        ..FaultProfile::default()
    };
    let config = PipelineConfig {
        comparator: Comparator::Llm,
        ..faulty(profile, Ablation::SeSyn)
    };
    let bound = u64::from(config.max_semantic_iterations) * 4 + u64::from(config.max_syntax_iterations);
    let pipeline = Pipeline::new(config, NlFrontend::default()).unwrap();
    for inst in sample(3, 5) {
        let out = pipeline.run_instance(&inst);
        assert!(out.outcome.failure().is_some(), "{} should fail", inst.id);
        assert!(out.trace.backend_calls <= bound, "{}: {} calls", inst.id, out.trace.backend_calls);
    }
}

#[test]
fn faulty_runs_are_reproducible() {
    let profile = FaultProfile {
        syntax_fault_rate: 0.4,
        semantic_fault_rate: 0.4,
        rng_seed: 77,
        ..FaultProfile::default()
    };
    let traces = || {
        let pipeline = Pipeline::new(faulty(profile.clone(), Ablation::SeSyn), NlFrontend::default()).unwrap();
        sample(8, 3)
            .iter()
            .map(|i| {
                let t = pipeline.run_instance(i).trace;
                serde_json::to_string(&(&t.steps, &t.outcome, &t.final_program)).unwrap()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(traces(), traces());
}

#[test]
fn llm_comparator_agrees_with_the_canonical_one() {
    let nl = NlFrontend::default();
    let llm = Pipeline::new(
        PipelineConfig {
            comparator: Comparator::Llm,
            ..PipelineConfig::default()
        },
        nl.clone(),
    )
    .unwrap();
    let mut r = rng(2024);
    let (mut same, mut different) = (0, 0);
    for i in 0..200u64 {
        let a = nl.back_translate(&nl_program(&mut rng(i)));
        let mut b = match i % 4 {
            0 => a.clone(),
            1 => nl.back_translate(&nl_program(&mut rng(i + 10_000))),
            2 if a.len() > 1 => a[1..].to_vec(),
            _ => a.clone(),
        };
        b.shuffle(&mut r);
        let expected = nl.canonical_compare(&a, &b).is_same();
        assert_eq!(llm.judge_similarity(&a, &b).unwrap().same, expected, "{a:?} vs {b:?}");
        if expected {
            same += 1;
        } else {
            different += 1;
        }
    }
    assert!(same > 50 && different > 50, "{same} same, {different} different");
    assert_eq!(llm.backend().calls(), 400);
}

#[test]
fn backends_are_shareable_across_pipelines() {
    let backend: Arc<dyn LlmBackend> = Arc::new(MockBackend::perfect(NlFrontend::default(), None));
    let a = Pipeline::with_backend(PipelineConfig::default(), backend.clone(), NlFrontend::default(), PromptSet::builtin());
    let b = Pipeline::with_backend(PipelineConfig::default(), backend.clone(), NlFrontend::default(), PromptSet::builtin());
    let inst = &sample(1, 1)[0];
    let x = a.run_instance(inst).trace.backend_calls;
    let y = b.run_instance(inst).trace.backend_calls;
    assert_eq!(backend.calls(), x + y);
}
