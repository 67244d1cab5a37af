//! Fixed channel draws shared by the benchmarks.

use otfs_isac::metrics::dbm_to_linear;
use otfs_isac::scenario::stream_rng;
use otfs_isac::{
    CMatrix, ChannelStatistics, DdChannel, DopplerUnit, DualSolver, NoiseModel, OtfsGrid,
    QamConstellation, Scenario, SolverConfig,
};

pub struct Fixture {
    pub scenario: Scenario,
    pub h_c: DdChannel,
    pub h_dot: DdChannel,
    pub solver: DualSolver,
    pub noise: NoiseModel,
    pub qam: QamConstellation,
    pub config: SolverConfig,
}

impl Fixture {
    /// One `m x n` draw with 3 paths at 35 dBm, sensing threshold halfway
    /// through its feasible range.
    pub fn new(m: usize, n: usize, seed: u64) -> Self {
        let grid = OtfsGrid::new(m, n, 2e3).expect("grid");
        let max_delay = 4.min(m * n - 1);
        let stats = ChannelStatistics::new(3, max_delay, 2.0).expect("channel statistics");
        let scenario =
            Scenario::draw(grid, &stats, 1.0, &mut stream_rng(seed, 0)).expect("channel draw");
        let h_c = scenario.comm_channel().expect("comm channel");
        let h_dot = scenario
            .derivative_channel(DopplerUnit::Tap)
            .expect("derivative");
        let solver = DualSolver::new(&h_c, &h_dot).expect("solver");
        let p_t = dbm_to_linear(35.0);
        let config = SolverConfig::new(p_t, solver.gamma_range(p_t).midpoint());
        Self {
            scenario,
            h_c,
            h_dot,
            solver,
            noise: NoiseModel::from_dbm(0.0, 0.0).expect("noise"),
            qam: QamConstellation::new(4).expect("qam"),
            config,
        }
    }

    pub fn precoder(&self) -> CMatrix {
        let sol = self
            .solver
            .solve(&self.config, &self.qam, &self.noise)
            .expect("solve");
        self.solver
            .balanced_precoder(&sol)
            .expect("balanced precoder")
    }
}
