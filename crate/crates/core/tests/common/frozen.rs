//! Values computed offline with 50-digit mpmath (natural logs).
#![allow(clippy::excessive_precision)]

/// (g_u, g_v, N, M, |O|, delta, h)
pub const BOUND_GRID: [(usize, usize, usize, usize, usize, f64, f64); 100] = [
    (1, 1, 100, 100, 1000, 0.1, 0.90233254099693990616),
    (1, 1, 100, 100, 20000, 0.05, 0.20181062758589724592),
    (1, 1, 100, 100, 100480507, 0.01, 0.0028486070336745935706),
    (1, 1, 100, 100, 3, 0.5, 16.466119716818300706),
    (1, 1, 100, 100, 777777, 0.001, 0.032400543966513101521),
    (1, 1, 1000, 500, 1000, 0.1, 2.6982655746012559908),
    (1, 1, 1000, 500, 20000, 0.05, 0.60336488481964734451),
    (1, 1, 1000, 500, 100480507, 0.01, 0.0085129115017322675733),
    (1, 1, 1000, 500, 3, 0.5, 49.260641463281917994),
    (1, 1, 1000, 500, 777777, 0.001, 0.096766672843246999135),
    (1, 1, 480189, 17770, 1000, 0.1, 57.480509453069093319),
    (1, 1, 480189, 17770, 20000, 0.05, 12.853033325946750375),
    (1, 1, 480189, 17770, 100480507, 0.01, 0.1813342228832015216),
    (1, 1, 480189, 17770, 3, 0.5, 1049.4455936771899786),
    (1, 1, 480189, 17770, 777777, 0.001, 2.0610722300456100145),
    (1, 1, 5000, 20000, 1000, 0.1, 12.936876478451019961),
    (1, 1, 5000, 20000, 20000, 0.05, 2.892776517398894604),
    (1, 1, 5000, 20000, 100480507, 0.01, 0.040812200954552776065),
    (1, 1, 5000, 20000, 3, 0.5, 236.19340119186440873),
    (1, 1, 5000, 20000, 777777, 0.001, 0.46387916941519480742),
    (2, 2, 100, 100, 1000, 0.1, 1.2228373084348377819),
    (2, 2, 100, 100, 20000, 0.05, 0.27346641992120701345),
    (2, 2, 100, 100, 100480507, 0.01, 0.0038591787461557665832),
    (2, 2, 100, 100, 3, 0.5, 22.319844413614995292),
    (2, 2, 100, 100, 777777, 0.001, 0.043880871997220032406),
    (2, 2, 1000, 500, 1000, 0.1, 3.6781402065659715185),
    (2, 2, 1000, 500, 20000, 0.05, 0.82246768789866291027),
    (2, 2, 1000, 500, 100480507, 0.01, 0.011603950020744548237),
    (2, 2, 1000, 500, 3, 0.5, 67.151348113052182122),
    (2, 2, 1000, 500, 777777, 0.001, 0.13189784112688713355),
    (2, 2, 480189, 17770, 1000, 0.1, 79.138295342210551741),
    (2, 2, 480189, 17770, 20000, 0.05, 17.69586129048899189),
    (2, 2, 480189, 17770, 100480507, 0.01, 0.24965819269007213571),
    (2, 2, 480189, 17770, 3, 0.5, 1444.8608912224027771),
    (2, 2, 480189, 17770, 777777, 0.001, 2.8376525810759632156),
    (2, 2, 5000, 20000, 1000, 0.1, 17.81593997886989407),
    (2, 2, 5000, 20000, 20000, 0.05, 3.983767462492539119),
    (2, 2, 5000, 20000, 100480507, 0.01, 0.056204180476408373359),
    (2, 2, 5000, 20000, 3, 0.5, 325.27266132263989399),
    (2, 2, 5000, 20000, 777777, 0.001, 0.63882627148043088685),
    (2, 5, 100, 100, 1000, 0.1, 1.6208211869753643444),
    (2, 5, 100, 100, 20000, 0.05, 0.3624505410217033292),
    (2, 5, 100, 100, 100480507, 0.01, 0.0051143369647838448592),
    (2, 5, 100, 100, 3, 0.5, 29.587478214001340906),
    (2, 5, 100, 100, 777777, 0.001, 0.058143048732623746201),
    (2, 5, 1000, 500, 1000, 0.1, 4.5067183357292036816),
    (2, 5, 1000, 500, 20000, 0.05, 1.0077414532306409842),
    (2, 5, 1000, 500, 100480507, 0.01, 0.014217780847310354487),
    (2, 5, 1000, 500, 3, 0.5, 82.279413056247118522),
    (2, 5, 1000, 500, 777777, 0.001, 0.16160600125866731694),
    (2, 5, 480189, 17770, 1000, 0.1, 81.228985954433825887),
    (2, 5, 480189, 17770, 20000, 0.05, 18.163353910772093476),
    (2, 5, 480189, 17770, 100480507, 0.01, 0.25625370934542690609),
    (2, 5, 480189, 17770, 3, 0.5, 1483.0315072475310863),
    (2, 5, 480189, 17770, 777777, 0.001, 2.9126182021225666148),
    (2, 5, 5000, 20000, 1000, 0.1, 26.425427408552645499),
    (2, 5, 5000, 20000, 20000, 0.05, 5.908906668319764828),
    (2, 5, 5000, 20000, 100480507, 0.01, 0.083364561385461528641),
    (2, 5, 5000, 20000, 3, 0.5, 482.45981145435978114),
    (2, 5, 5000, 20000, 777777, 0.001, 0.94753484154138001655),
    (4, 4, 100, 100, 1000, 0.1, 1.6541748825944090773),
    (4, 4, 100, 100, 20000, 0.05, 0.36990817210467971951),
    (4, 4, 100, 100, 100480507, 0.01, 0.0052195355326956845488),
    (4, 4, 100, 100, 3, 0.5, 30.196522003093943539),
    (4, 4, 100, 100, 777777, 0.001, 0.059338494844760625134),
    (4, 4, 1000, 500, 1000, 0.1, 5.0007317681429508699),
    (4, 4, 1000, 500, 20000, 0.05, 1.1182053655412409017),
    (4, 4, 1000, 500, 100480507, 0.01, 0.015776208896507891806),
    (4, 4, 1000, 500, 3, 0.5, 91.298984108911651289),
    (4, 4, 1000, 500, 777777, 0.001, 0.17931887491476357007),
    (4, 4, 480189, 17770, 1000, 0.1, 108.79092534402195963),
    (4, 4, 480189, 17770, 20000, 0.05, 24.326390796604158204),
    (4, 4, 480189, 17770, 100480507, 0.01, 0.34320355915681036081),
    (4, 4, 480189, 17770, 3, 0.5, 1986.2413945682771515),
    (4, 4, 480189, 17770, 777777, 0.001, 3.9009031221254951522),
    (4, 4, 5000, 20000, 1000, 0.1, 24.499023657106991287),
    (4, 4, 5000, 20000, 20000, 0.05, 5.4781498095847940116),
    (4, 4, 5000, 20000, 100480507, 0.01, 0.077287326526496144823),
    (4, 4, 5000, 20000, 3, 0.5, 447.28862994436891928),
    (4, 4, 5000, 20000, 777777, 0.001, 0.87846014353646896371),
    (8, 3, 100, 100, 1000, 0.1, 1.9825121356554624883),
    (8, 3, 100, 100, 20000, 0.05, 0.44332273467596171049),
    (8, 3, 100, 100, 100480507, 0.01, 0.006255161740452850553),
    (8, 3, 100, 100, 3, 0.5, 36.191848295184584053),
    (8, 3, 100, 100, 777777, 0.001, 0.07110751213276129608),
    (8, 3, 1000, 500, 1000, 0.1, 6.3998944370111209849),
    (8, 3, 1000, 500, 20000, 0.05, 1.431065955476479309),
    (8, 3, 1000, 500, 100480507, 0.01, 0.020190078399242588444),
    (8, 3, 1000, 500, 3, 0.5, 116.844403782594107),
    (8, 3, 1000, 500, 777777, 0.001, 0.22948667286506488178),
    (8, 3, 480189, 17770, 1000, 0.1, 153.95836949738031776),
    (8, 3, 480189, 17770, 20000, 0.05, 34.426138241796360768),
    (8, 3, 480189, 17770, 100480507, 0.01, 0.48569362674014914101),
    (8, 3, 480189, 17770, 3, 0.5, 2810.8823486331908979),
    (8, 3, 480189, 17770, 777777, 0.001, 5.5204664644619442291),
    (8, 3, 5000, 20000, 1000, 0.1, 24.791888277384425614),
    (8, 3, 5000, 20000, 20000, 0.05, 5.543636310815769877),
    (8, 3, 5000, 20000, 100480507, 0.01, 0.078211227849724890179),
    (8, 3, 5000, 20000, 3, 0.5, 452.63558544718770466),
    (8, 3, 5000, 20000, 777777, 0.001, 0.88896133406644962267),
];

/// (N, M, d_max, depth, delta, (2l+1) ln d / ln N)
pub const TREE_TUPLES: [(usize, usize, usize, usize, f64, f64); 10] = [
    (1000, 1000, 5, 1, 0.1, 0.69897000433601880479),
    (10000, 10000, 10, 1, 0.1, 0.75),
    (480189, 17770, 50, 1, 0.2, 0.89712026291198781586),
    (100, 200, 3, 2, 0.05, 1.1928031367991560932),
    (1000000, 1000000, 20, 3, 0.1, 1.5178683282746447277),
    (5000, 20000, 7, 0, 0.5, 0.22846847609567345019),
    (20, 20, 2, 1, 0.01, 0.69413463947927752279),
    (123457, 654321, 11, 4, 0.3, 1.8408141470864843614),
    (2, 2, 2, 0, 0.9, 1.0),
    (1000000000, 1000000000, 1000, 2, 0.25, 1.6666666666666666667),
];
