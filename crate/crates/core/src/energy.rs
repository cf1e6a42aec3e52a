//! Sensor energy budget: LoRa time on air and the per-visit frame cap.
//!
//! Over its lifetime an ED must pay for daily computation and for every
//! frame it sends to the UAV. With `L` days, `V` visits a day, `N` frames
//! per visit of mean airtime `Lf`, the budget is
//! `L * T_c * I_c + L * V * N * Lf * I_t <= C_b * 3600` (charge in mA·s),
//! and the cap is the largest `N` that satisfies it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyProfile {
    pub battery_mah: f64,
    pub lifetime_days: f64,
    pub visits_per_day: f64,
    pub compute_s_per_day: f64,
    pub tx_current_ma: f64,
    pub compute_current_ma: f64,
    pub payload_bytes: usize,
    pub sf_set: Vec<u8>,
    pub bandwidth_hz: f64,
    /// Coding rate `4/(4 + cr)`, `cr` in 1..=4.
    pub coding_rate: u8,
    pub preamble_symbols: f64,
    pub explicit_header: bool,
    pub crc: bool,
    /// Low-data-rate optimisation; `None` enables it when the symbol time
    /// exceeds 16 ms (SF11 and SF12 at 125 kHz).
    pub low_data_rate: Option<bool>,
}

impl Default for EnergyProfile {
    /// A 600 mAh cell over two years, twelve UAV visits a day, 20 s of
    /// daily computation at 50 mA, 83 mA transmit current, 50-byte
    /// messages on SF 7..=9, 125 kHz, CR 4/5, 8-symbol preamble.
    fn default() -> Self {
        Self {
            battery_mah: 600.0,
            lifetime_days: 730.0,
            visits_per_day: 12.0,
            compute_s_per_day: 20.0,
            tx_current_ma: 83.0,
            compute_current_ma: 50.0,
            payload_bytes: 50,
            sf_set: vec![7, 8, 9],
            bandwidth_hz: 125_000.0,
            coding_rate: 1,
            preamble_symbols: 8.0,
            explicit_header: true,
            crc: true,
            low_data_rate: None,
        }
    }
}

impl EnergyProfile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("battery_mah", self.battery_mah),
            ("lifetime_days", self.lifetime_days),
            ("visits_per_day", self.visits_per_day),
            ("tx_current_ma", self.tx_current_ma),
            ("bandwidth_hz", self.bandwidth_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("compute_s_per_day", self.compute_s_per_day),
            ("compute_current_ma", self.compute_current_ma),
            ("preamble_symbols", self.preamble_symbols),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(1..=4).contains(&self.coding_rate) {
            return Err(Error::InvalidParameter(format!(
                "coding_rate must be in 1..=4 (4/5 .. 4/8), got {}",
                self.coding_rate
            )));
        }
        if self.sf_set.is_empty() {
            return Err(Error::InvalidParameter("sf_set must not be empty".into()));
        }
        if let Some(sf) = self.sf_set.iter().find(|&&s| !(7..=12).contains(&s)) {
            return Err(Error::InvalidParameter(format!("spreading factor {sf} outside 7..=12")));
        }
        Ok(())
    }
}

/// Seconds per LoRa symbol.
pub fn symbol_time(sf: u8, bandwidth_hz: f64) -> f64 {
    f64::from(1u32 << sf) / bandwidth_hz
}

/// Time on air in seconds of one frame at `sf` (standard LoRa formula).
pub fn lora_airtime(sf: u8, p: &EnergyProfile) -> Result<f64> {
    if !(7..=12).contains(&sf) {
        return Err(Error::InvalidParameter(format!("spreading factor {sf} outside 7..=12")));
    }
    let t_sym = symbol_time(sf, p.bandwidth_hz);
    let de = p.low_data_rate.unwrap_or(t_sym > 0.016);
    let sf_f = f64::from(sf);
    let numerator = 8.0 * p.payload_bytes as f64 - 4.0 * sf_f + 28.0 + if p.crc { 16.0 } else { 0.0 }
        - if p.explicit_header { 0.0 } else { 20.0 };
    let denominator = 4.0 * (sf_f - if de { 2.0 } else { 0.0 });
    let payload_symbols = 8.0 + ((numerator / denominator).ceil() * f64::from(p.coding_rate + 4)).max(0.0);
    Ok((p.preamble_symbols + 4.25 + payload_symbols) * t_sym)
}

/// Airtime averaged over a uniform SF choice.
pub fn mean_airtime(p: &EnergyProfile) -> Result<f64> {
    let total: f64 = p.sf_set.iter().map(|&sf| lora_airtime(sf, p)).sum::<Result<f64>>()?;
    Ok(total / p.sf_set.len() as f64)
}

/// Terms of the budget, in mA·s over the lifetime.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetBreakdown {
    pub battery_charge_mas: f64,
    pub compute_drain_mas: f64,
    pub mean_airtime_s: f64,
    /// Charge spent if one more frame is sent on every visit.
    pub per_frame_slot_mas: f64,
    pub n_max: usize,
}

impl BudgetBreakdown {
    /// Lifetime drain when `n` frames are sent per visit.
    pub fn drain(&self, n: usize) -> f64 {
        self.compute_drain_mas + n as f64 * self.per_frame_slot_mas
    }
}

pub fn budget(p: &EnergyProfile) -> Result<BudgetBreakdown> {
    p.validate()?;
    let battery = p.battery_mah * 3600.0;
    let compute = p.lifetime_days * p.compute_s_per_day * p.compute_current_ma;
    if battery <= compute {
        return Err(Error::InfeasibleBudget(format!(
            "battery charge C_b = {battery:.6} mA·s does not exceed the lifetime compute drain \
             L·T_c·I_c = {compute:.6} mA·s, so no frame can be afforded"
        )));
    }
    let lf = mean_airtime(p)?;
    let per_frame = p.lifetime_days * p.visits_per_day * lf * p.tx_current_ma;
    let n_max = ((battery - compute) / per_frame).floor();
    Ok(BudgetBreakdown {
        battery_charge_mas: battery,
        compute_drain_mas: compute,
        mean_airtime_s: lf,
        per_frame_slot_mas: per_frame,
        n_max: if n_max.is_finite() { n_max as usize } else { 0 },
    })
}

/// Largest number of frames per visit the battery sustains.
pub fn n_max(p: &EnergyProfile) -> Result<usize> {
    budget(p).map(|b| b.n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn airtime_reference_value() {
        // 50 bytes, SF7, 125 kHz, CR 4/5, explicit header, CRC:
        // ceil((400 - 28 + 28 + 16) / 28) = 15 -> 8 + 75 = 83 payload symbols,
        // (8 + 4.25 + 83) * 1.024 ms
        let t = lora_airtime(7, &EnergyProfile::default()).unwrap();
        assert!((t - 0.097_536).abs() < 1e-9, "{t}");
        // 51 bytes is the widely tabulated 102.656 ms LoRaWAN case
        let p = EnergyProfile {
            payload_bytes: 51,
            ..EnergyProfile::default()
        };
        assert!((lora_airtime(7, &p).unwrap() - 0.102_656).abs() < 1e-9);
    }

    #[test]
    fn airtime_scales_with_sf() {
        let p = EnergyProfile::default();
        let mut prev = 0.0;
        for sf in 7..=12 {
            let t = lora_airtime(sf, &p).unwrap();
            assert!(t > prev);
            if sf > 7 {
                let r = t / prev;
                assert!((1.5..2.5).contains(&r), "sf {sf}: ratio {r}");
            }
            prev = t;
        }
        assert!(lora_airtime(6, &p).is_err());
    }

    #[test]
    fn empty_payload_still_has_airtime() {
        let p = EnergyProfile {
            payload_bytes: 0,
            ..EnergyProfile::default()
        };
        assert!(lora_airtime(7, &p).unwrap() > 0.0);
    }

    #[test]
    fn low_data_rate_switches_on_at_high_sf() {
        let p = EnergyProfile::default();
        let auto = lora_airtime(12, &p).unwrap();
        let off = lora_airtime(
            12,
            &EnergyProfile {
                low_data_rate: Some(false),
                ..p.clone()
            },
        )
        .unwrap();
        assert!(auto > off);
    }

    #[test]
    fn reference_profile_cap() {
        let n = n_max(&EnergyProfile::default()).unwrap();
        assert!((9..=11).contains(&n), "{n}");
    }

    #[test]
    fn floor_is_tight() {
        for battery in [300.0, 600.0, 1200.0, 2400.0] {
            let p = EnergyProfile {
                battery_mah: battery,
                ..EnergyProfile::default()
            };
            let b = budget(&p).unwrap();
            assert!(b.drain(b.n_max) <= b.battery_charge_mas);
            assert!(b.drain(b.n_max + 1) > b.battery_charge_mas);
        }
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let p = EnergyProfile {
            battery_mah: 100.0,
            ..EnergyProfile::default()
        };
        let err = n_max(&p).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget(_)));
        assert!(err.to_string().contains("compute drain"));
    }

    #[test]
    fn monotone_in_parameters() {
        let base = EnergyProfile {
            battery_mah: 3000.0,
            ..EnergyProfile::default()
        };
        let n0 = n_max(&base).unwrap();
        let vary: [fn(&mut EnergyProfile); 5] = [
            |p| p.lifetime_days *= 1.5,
            |p| p.visits_per_day *= 2.0,
            |p| p.tx_current_ma *= 2.0,
            |p| p.compute_s_per_day *= 3.0,
            |p| p.compute_current_ma *= 3.0,
        ];
        for f in vary {
            let mut p = base.clone();
            f(&mut p);
            assert!(n_max(&p).unwrap() <= n0);
        }
        let mut bigger = base.clone();
        bigger.battery_mah *= 2.0;
        assert!(n_max(&bigger).unwrap() >= n0);
        let mut huge = base.clone();
        huge.tx_current_ma = 1e12;
        assert_eq!(n_max(&huge).unwrap(), 0);
    }

    #[test]
    fn doubling_battery_roughly_doubles_cap() {
        let p = EnergyProfile {
            compute_s_per_day: 0.0,
            battery_mah: 6000.0,
            ..EnergyProfile::default()
        };
        let n1 = n_max(&p).unwrap() as f64;
        let n2 = n_max(&EnergyProfile {
            battery_mah: 12_000.0,
            ..p
        })
        .unwrap() as f64;
        assert!((n2 / n1 - 2.0).abs() < 0.05, "{n1} {n2}");
    }

    #[test]
    fn profile_from_toml() {
        let p = EnergyProfile::from_toml("battery_mah = 1200\ntx_current_ma = 40\n").unwrap();
        assert_eq!(p.battery_mah, 1200.0);
        assert_eq!(p.visits_per_day, 12.0);
        assert!(EnergyProfile::from_toml("battery = 1").is_err());
        assert!(EnergyProfile::from_toml("coding_rate = 9").is_err());
    }
}
