//! Scratch harness for tuning benchmark hyperparameters.

use std::collections::BTreeMap;
use std::time::Instant;

use commtune_core::eval::{
    generate_responses, judge_with, randomized_context_eval, reward_accuracy, winrate,
    ContextChoice, ContextMode,
};
use commtune_core::features::Featurizer;
use commtune_core::model::{CandidateSet, ModelParams};
use commtune_core::synth::{generate, SynthConfig};
use commtune_core::train::{examples_from_instances, train_dpo, train_reward, train_sft, DpoConfig, RewardTrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let get = |name: &str, default: f64| -> f64 {
        args.iter()
            .position(|a| a == name)
            .and_then(|i| args.get(i + 1))
            .and_then(|v| v.parse().ok())
            .unwrap_or(default)
    };
    let dim = get("--dim", 4096.0) as usize;
    let embed = get("--embed", 16.0) as usize;
    let lr = get("--lr", 0.5);
    let epochs = get("--epochs", 3.0) as usize;
    let scale = get("--scale", 0.05);
    let dpo_lr = get("--dpo-lr", 5.0);
    let dpo_epochs = get("--dpo-epochs", 3.0) as usize;
    let pairs = get("--pairs", 5000.0) as usize;
    let questions = get("--questions", 2000.0) as usize;

    let t0 = Instant::now();
    let config = SynthConfig {
        pairs_per_community: pairs,
        n_questions: questions,
        noise_temperature: 0.5,
        seed: 7,
        ..SynthConfig::default()
    };
    let data = generate(&config).unwrap();
    println!(
        "generated: {} train, {} eval pairs, {} prompts in {:?}",
        data.train.len(),
        data.eval_pairs.len(),
        data.eval_prompts.len(),
        t0.elapsed()
    );

    // Bayes reference: score with the oracle's own utilities
    let oracle_acc = {
        let mut n = 0;
        let mut correct = 0;
        for inst in &data.eval_pairs {
            let uc = data.world.utility(&inst.subreddit, &inst.chosen).unwrap();
            let ur = data.world.utility(&inst.subreddit, &inst.rejected).unwrap();
            n += 1;
            if uc > ur {
                correct += 1;
            }
        }
        100.0 * correct as f64 / n as f64
    };
    println!("oracle scorer accuracy: {oracle_acc:.2}%");

    let fz = Featurizer::new(dim);
    let examples = examples_from_instances::<f64>(&fz, &data.train);
    let communities = data.world.communities.clone();
    let steps_per_epoch = data.train.len().div_ceil(32);

    // context reward model
    let t = Instant::now();
    let init_c = ModelParams::random_init(dim, embed, &communities, true, false, 7, scale);
    let cfg = RewardTrainConfig { learning_rate: lr, steps: epochs * steps_per_epoch, batch_size: 32, seed: 7 };
    let reward_c = train_reward(&examples, init_c, &cfg).unwrap();
    println!(
        "reward-c trained in {:?}; first loss {:.4}, last {:.4}",
        t.elapsed(),
        reward_c.loss_curve[0],
        reward_c.loss_curve.last().unwrap()
    );
    let acc_c = reward_accuracy(&reward_c.params, &fz, &data.eval_pairs, ContextMode::True).unwrap();
    println!("reward-c accuracy: {:.2}%", acc_c.accuracy_pct);

    // no-context reward model
    let init_nc = ModelParams::random_init(dim, embed, &communities, false, false, 7, scale);
    let reward_nc = train_reward(&examples, init_nc, &cfg).unwrap();
    let acc_nc = reward_accuracy(&reward_nc.params, &fz, &data.eval_pairs, ContextMode::True).unwrap();
    println!("reward-nc accuracy: {:.2}%  (gap {:.2})", acc_nc.accuracy_pct, acc_c.accuracy_pct - acc_nc.accuracy_pct);

    // SFT + DPO, contextual and not
    let t = Instant::now();
    let sft_cfg = RewardTrainConfig { learning_rate: lr, steps: epochs * steps_per_epoch, batch_size: 32, seed: 8 };
    let sft_c = train_sft(&examples, ModelParams::random_init(dim, embed, &communities, true, false, 9, scale), &sft_cfg).unwrap();
    let sft_nc = train_sft(&examples, ModelParams::random_init(dim, embed, &communities, false, false, 9, scale), &sft_cfg).unwrap();
    let dpo_cfg = DpoConfig { beta: 0.1, learning_rate: dpo_lr, steps: dpo_epochs * steps_per_epoch, batch_size: 32, seed: 10 };
    let dpo_c = train_dpo(&examples, &sft_c.params, &dpo_cfg).unwrap();
    let dpo_nc = train_dpo(&examples, &sft_nc.params, &dpo_cfg).unwrap();
    println!(
        "sft+dpo trained in {:?}; dpo-c loss {:.4}->{:.4}",
        t.elapsed(),
        dpo_c.loss_curve[0],
        dpo_c.loss_curve.last().unwrap()
    );

    // candidate sets for generation
    let cands: BTreeMap<String, CandidateSet<f64>> = data
        .candidates
        .iter()
        .filter(|c| c.post_id.starts_with('e'))
        .map(|c| (c.post_id.clone(), CandidateSet::from_texts(&fz, c.responses.clone()).unwrap()))
        .collect();

    // contextual vs non-contextual DPO under the oracle judge
    let t = Instant::now();
    let side_nc = generate_responses(&dpo_nc.params, &fz, &data.eval_prompts, &cands, &ContextChoice::True, "nc", 0.95, 0.7, 21).unwrap();
    let side_c = generate_responses(&dpo_c.params, &fz, &data.eval_prompts, &cands, &ContextChoice::True, "c", 0.95, 0.7, 22).unwrap();
    let verdicts = judge_with(&data.world, &side_nc, &side_c, 23).unwrap();
    let report = winrate(&verdicts).unwrap();
    println!("dpo-c beats dpo-nc: {:.2}% (eval in {:?})", report.win_rate, t.elapsed());

    // randomized context ablation on the contextual model
    let (rand_report, _) = randomized_context_eval(
        &dpo_c.params, &fz, &data.eval_prompts, &cands, &communities, &data.world, 0.95, 0.7, 31,
    )
    .unwrap();
    println!("randomized-context win rate (dpo-c): {:.2}%", rand_report.win_rate);

    // sanity null: context-blind model
    let (null_report, _) = randomized_context_eval(
        &dpo_nc.params, &fz, &data.eval_prompts, &cands, &communities, &data.world, 0.95, 0.7, 32,
    )
    .unwrap();
    println!("randomized-context win rate (dpo-nc, null): {:.2}%", null_report.win_rate);

    if get("--leak-study", 0.0) > 0.0 {
        leak_study(dim, embed, lr, epochs, scale, dpo_lr, dpo_epochs);
    }

    println!("total {:?}", t0.elapsed());
}

fn leak_study(dim: usize, embed: usize, lr: f64, epochs: usize, scale: f64, dpo_lr: f64, dpo_epochs: usize) {
    use commtune_core::eval::{predictability_regression, train_subreddit_classifier, ClassifierConfig, WinSample};
    use commtune_core::judge::Winner;

    println!("--- leak study ---");
    let t0 = Instant::now();
    let config = SynthConfig {
        pairs_per_community: 5000,
        n_questions: 2000,
        noise_temperature: 0.5,
        leak_fraction: 0.5,
        seed: 7,
        ..SynthConfig::default()
    };
    let data = generate(&config).unwrap();
    let fz = Featurizer::new(dim);
    let examples = examples_from_instances::<f64>(&fz, &data.train);
    let communities = data.world.communities.clone();
    let steps_per_epoch = data.train.len().div_ceil(32);

    let sft_cfg = RewardTrainConfig { learning_rate: lr, steps: epochs * steps_per_epoch, batch_size: 32, seed: 8 };
    let dpo_cfg = DpoConfig { beta: 0.1, learning_rate: dpo_lr, steps: dpo_epochs * steps_per_epoch, batch_size: 32, seed: 10 };
    let sft_c = train_sft(&examples, ModelParams::random_init(dim, embed, &communities, true, true, 9, scale), &sft_cfg).unwrap();
    let sft_nc = train_sft(&examples, ModelParams::random_init(dim, embed, &communities, false, true, 9, scale), &sft_cfg).unwrap();
    let dpo_c = train_dpo(&examples, &sft_c.params, &dpo_cfg).unwrap();
    let dpo_nc = train_dpo(&examples, &sft_nc.params, &dpo_cfg).unwrap();
    println!("trained with interactions in {:?}", t0.elapsed());

    let cands: BTreeMap<String, CandidateSet<f64>> = data
        .candidates
        .iter()
        .filter(|c| c.post_id.starts_with('e'))
        .map(|c| (c.post_id.clone(), CandidateSet::from_texts(&fz, c.responses.clone()).unwrap()))
        .collect();
    let side_nc = generate_responses(&dpo_nc.params, &fz, &data.eval_prompts, &cands, &ContextChoice::True, "nc", 0.95, 0.7, 21).unwrap();
    let side_c = generate_responses(&dpo_c.params, &fz, &data.eval_prompts, &cands, &ContextChoice::True, "c", 0.95, 0.7, 22).unwrap();
    let verdicts = judge_with(&data.world, &side_nc, &side_c, 23).unwrap();
    let report = winrate(&verdicts).unwrap();
    println!("dpo-c beats dpo-nc with leak: {:.2}%", report.win_rate);

    let samples: Vec<(String, String)> =
        data.train.iter().map(|i| (i.question.clone(), i.subreddit.clone())).collect();
    let clf_cfg = ClassifierConfig { dim, seed: 3, ..ClassifierConfig::default() };
    let clf = train_subreddit_classifier(&samples, &clf_cfg).unwrap();

    let wins: Vec<WinSample> = data
        .eval_prompts
        .iter()
        .zip(&verdicts)
        .map(|(p, v)| WinSample {
            win: v.winner == Some(Winner::Model2),
            logprob_true_subreddit: clf.predict_logprob(&p.question, &p.subreddit).unwrap(),
        })
        .collect();
    let leaky_lp: Vec<f64> = wins.iter().map(|w| w.logprob_true_subreddit).collect();
    let hi = leaky_lp.iter().filter(|lp| **lp > -0.1).count();
    println!("classifier: {} of {} prompts highly predictable", hi, wins.len());
    let fit = predictability_regression(&wins).unwrap();
    println!(
        "predictability regression: slope {:.4}, p {:.2e}, converged {}",
        fit.coefficient, fit.p_value, fit.converged
    );
    println!("leak study total {:?}", t0.elapsed());
}
