//! Benchmark problems, their hyperparameter presets and the run config.

mod presets;
mod problems;

pub use presets::{build_preset, build_preset_named, preset_config, Preset};
pub use problems::{
    ex1_f, ex1_u, ex2_f, ex2_u, ex3_f, ex3_u, exact_residual, problem, Ex1Exact, Ex1Source, Ex2Exact, Ex2Source, Ex3Exact,
    Ex3Source, ProblemId,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossKind;
    use crate::networks::ModelKind;
    use crate::trainer::TrainConfig;

    #[test]
    fn table_values() {
        let c = preset_config(ProblemId::Ex1);
        assert_eq!((c.d, c.n_r, c.n_b, c.n_t, c.k_u, c.k_phi), (5, 4000, 4000, 20, 2, 1));
        assert_eq!((c.alpha, c.beta, c.epsilon, c.l_theta, c.l_eta), (1e7, 1e5, 1e-2, 0.015, 0.04));
        assert_eq!((c.u_layers, c.u_hid_dim1, c.u_hid_dim2, c.v_layers, c.v_hid_dim), (8, 20, 10, 9, 50));
        assert_eq!((c.model, c.loss), (ModelKind::XnodeRecursive, LossKind::Cwan));
        let c = preset_config(ProblemId::Ex2);
        assert_eq!((c.alpha, c.beta, c.gamma), (1e5, 1e7, 1e5));
        let c = preset_config(ProblemId::Ex3);
        assert_eq!((c.alpha, c.beta, c.gamma, c.l_eta, c.u_layers, c.n_max), (6e7, 12e7, 12e7, 0.03, 12, 600));
    }

    #[test]
    fn presets_round_trip_through_json() {
        for id in [ProblemId::Ex1, ProblemId::Ex2, ProblemId::Ex3] {
            let c = preset_config(id);
            let back = TrainConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
            assert!(build_preset(id).is_ok());
        }
    }

    #[test]
    fn config_uses_table_names() {
        let v: serde_json::Value = serde_json::from_str(&preset_config(ProblemId::Ex1).to_json()).unwrap();
        for key in ["N_r", "N_b", "n_T", "K_u", "K_phi", "u_hid-dim1", "u_hid-dim2", "v_hid-dim", "N_max", "gamma_d"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut v: serde_json::Value = serde_json::from_str(&preset_config(ProblemId::Ex1).to_json()).unwrap();
        v.as_object_mut().unwrap().remove("N_r");
        let e = TrainConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(e.contains("N_r"), "{e}");

        let mut v: serde_json::Value = serde_json::from_str(&preset_config(ProblemId::Ex1).to_json()).unwrap();
        v["bogus"] = 1.into();
        assert!(TrainConfig::from_json(&v.to_string()).unwrap_err().to_string().contains("bogus"));

        let mut c = preset_config(ProblemId::Ex1);
        c.epsilon = 0.0;
        assert!(TrainConfig::from_json(&c.to_json()).unwrap_err().to_string().contains("epsilon"));
        c = preset_config(ProblemId::Ex1);
        c.gamma_d = -1.0;
        assert!(TrainConfig::from_json(&c.to_json()).unwrap_err().to_string().contains("gamma_d"));
    }

    #[test]
    fn unknown_preset() {
        assert!(build_preset_named("ex4").is_err());
    }
}
